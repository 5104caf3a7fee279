"""Context-free grammars with a lexicon, fragment roots and a substitution list.

Grammar files are line oriented::

    # comment
    %start S
    %fragment S NP
    S -> NP VP ;
    NP -> det n | n ;
    X -> ;                 # epsilon rule
    the : det
    saw : v n              # several categories for one word
    too => two             # substitution: heard word => intended word

Nonterminals are the symbols that appear on a left-hand side.  Terminals
are the categories named in lexicon lines, plus any listed in an optional
``%terminals`` directive.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

EOF = "$"

_SYM = r"[^\W\d][\w'\-]*"
_SYM_RE = re.compile(_SYM + r"\Z")
_COMMENT_RE = re.compile(r"(?:^|(?<=\s))#.*$")
_RULE_RE = re.compile(r"\s*(?P<lhs>" + _SYM + r")\s*->(?P<rhs>[^;]*);(?P<rest>.*)\Z")
_DIRECTIVE_RE = re.compile(r"\s*%(?P<name>\w+)(?P<args>.*)\Z")
_SUB_RE = re.compile(r"\s*(?P<heard>[^\s:]+)\s*=>(?P<rest>.*)\Z")
_LEX_RE = re.compile(r"\s*(?P<word>[^\s:]+)\s*:(?P<rest>.*)\Z")


@dataclass(frozen=True)
class Issue:
    message: str
    line: int | None = None
    column: int | None = None

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class GrammarError(ValueError):
    """Raised by :func:`load_grammar`; ``errors`` holds every problem found."""

    def __init__(self, errors: Sequence[Issue]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str  # "terminal" | "nonterminal"


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]
    rule_id: int
    internal: bool = False

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs)} ;".replace("->  ;", "-> ;")


@dataclass(frozen=True)
class Internals:
    """Names of the nonterminals added by :func:`augment`."""

    start: str
    frags: str
    frag: str
    user_start: str


@dataclass(frozen=True, eq=True)
class Grammar:
    rules: tuple[Rule, ...]
    start: str
    fragment_roots: frozenset[str]
    lexicon: Mapping[str, frozenset[str]]
    substitutions: Mapping[str, tuple[str, ...]]
    terminals: frozenset[str]
    nonterminals: frozenset[str]
    internals: Internals | None = None
    warnings: tuple[Issue, ...] = field(default=(), compare=False)

    __hash__ = None  # type: ignore[assignment]

    @property
    def augmented(self) -> bool:
        return self.internals is not None

    @property
    def symbols(self) -> dict[str, Symbol]:
        out = {t: Symbol(t, "terminal") for t in self.terminals}
        out.update((nt, Symbol(nt, "nonterminal")) for nt in self.nonterminals)
        return out

    @property
    def user_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if not r.internal)

    @property
    def user_start(self) -> str:
        return self.internals.user_start if self.internals else self.start

    def rules_for(self, lhs: str) -> list[Rule]:
        return [r for r in self.rules if r.lhs == lhs]

    def is_internal(self, symbol: str) -> bool:
        i = self.internals
        return i is not None and symbol in (i.start, i.frags, i.frag)

    @cached_property
    def nullable(self) -> frozenset[str]:
        nullable: set[str] = set()
        changed = True
        while changed:
            changed = False
            for r in self.rules:
                if r.lhs not in nullable and all(s in nullable for s in r.rhs):
                    nullable.add(r.lhs)
                    changed = True
        return frozenset(nullable)

    @cached_property
    def digest(self) -> str:
        """Stable hash of the user-visible grammar, used to pin tables to it."""
        return hashlib.sha256(dump_grammar(self).encode("utf-8")).hexdigest()


def _strip_comment(line: str) -> str:
    return _COMMENT_RE.sub("", line)


def _symbols_with_columns(text: str, offset: int) -> list[tuple[str, int]]:
    return [(m.group(), offset + m.start() + 1) for m in re.finditer(r"\S+", text)]


def load_grammar(text: str, substitutions: str | None = None) -> Grammar:
    """Parse and validate grammar file contents.

    ``substitutions`` is the optional contents of a separate substitution
    file (``heard => replacement`` lines).  Raises :class:`GrammarError`.
    """
    errors: list[Issue] = []
    warnings: list[Issue] = []
    start: str | None = None
    roots: list[tuple[str, int, int]] = []
    declared_terms: list[tuple[str, int, int]] = []
    raw_rules: list[tuple[str, tuple[str, ...], int, list[int]]] = []
    lexicon: dict[str, set[str]] = {}
    subs: dict[str, list[str]] = {}

    def parse_sub(m: re.Match, lineno: int, line: str) -> None:
        rest = m.group("rest")
        words = _symbols_with_columns(rest, m.start("rest"))
        if not words:
            errors.append(Issue("substitution needs a replacement word", lineno, len(line) + 1))
            return
        if len(words) > 1:
            errors.append(Issue(f"trailing garbage {words[1][0]!r}", lineno, words[1][1]))
            return
        heard, repl = m.group("heard"), words[0][0]
        if repl not in subs.setdefault(heard, []):
            subs[heard].append(repl)

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if (m := _DIRECTIVE_RE.match(line)) is not None:
            name = m.group("name")
            args = _symbols_with_columns(m.group("args"), m.start("args"))
            for sym, col in args:
                if not _SYM_RE.match(sym):
                    errors.append(Issue(f"bad symbol name {sym!r}", lineno, col))
            if name == "start":
                if len(args) != 1:
                    col = args[1][1] if len(args) > 1 else len(line) + 1
                    errors.append(Issue("%start takes exactly one symbol", lineno, col))
                elif start is not None:
                    errors.append(Issue("duplicate %start", lineno, 1))
                else:
                    start = args[0][0]
            elif name == "fragment":
                if not args:
                    errors.append(Issue("%fragment needs at least one symbol", lineno, len(line) + 1))
                roots.extend((s, lineno, c) for s, c in args)
            elif name == "terminals":
                declared_terms.extend((s, lineno, c) for s, c in args)
            else:
                errors.append(Issue(f"unknown directive %{name}", lineno, m.start("name")))
            continue
        if "->" in line:
            m = _RULE_RE.match(line)
            if m is None:
                col = line.find("->") + 1
                if ";" not in line:
                    errors.append(Issue("rule must end with ';'", lineno, len(line.rstrip()) + 1))
                else:
                    errors.append(Issue("malformed rule", lineno, col))
                continue
            rest = m.group("rest")
            if rest.strip():
                col = m.start("rest") + len(rest) - len(rest.lstrip()) + 1
                errors.append(Issue(f"trailing garbage {rest.strip()!r}", lineno, col))
                continue
            lhs = m.group("lhs")
            body: list[tuple[str, int]] = []
            alternatives: list[list[tuple[str, int]]] = [body]
            for sym, col in _symbols_with_columns(m.group("rhs"), m.start("rhs")):
                for piece in re.split(r"(\|)", sym):
                    if not piece:
                        continue
                    if piece == "|":
                        body = []
                        alternatives.append(body)
                    elif not _SYM_RE.match(piece):
                        errors.append(Issue(f"bad symbol name {piece!r}", lineno, col))
                    else:
                        body.append((piece, col))
            for alt in alternatives:
                raw_rules.append((lhs, tuple(s for s, _ in alt), lineno, [c for _, c in alt]))
            continue
        if (m := _SUB_RE.match(line)) is not None:
            parse_sub(m, lineno, line)
            continue
        if (m := _LEX_RE.match(line)) is not None:
            terms = _symbols_with_columns(m.group("rest"), m.start("rest"))
            if not terms:
                errors.append(Issue("lexicon entry needs at least one terminal", lineno, len(line) + 1))
                continue
            bad = [(t, c) for t, c in terms if not _SYM_RE.match(t)]
            if bad:
                errors.append(Issue(f"trailing garbage {bad[0][0]!r}", lineno, bad[0][1]))
                continue
            lexicon.setdefault(m.group("word"), set()).update(t for t, _ in terms)
            continue
        first = re.search(r"\S", line)
        errors.append(Issue("syntax error", lineno, first.start() + 1 if first else 1))

    if substitutions is not None:
        for lineno, raw in enumerate(substitutions.splitlines(), 1):
            line = _strip_comment(raw)
            if not line.strip():
                continue
            if (m := _SUB_RE.match(line)) is not None:
                parse_sub(m, lineno, line)
            else:
                errors.append(Issue("substitution file: expected 'heard => replacement'", lineno, 1))

    nonterminals = {lhs for lhs, *_ in raw_rules}
    terminals = {t for ts in lexicon.values() for t in ts}
    for t, lineno, col in declared_terms:
        if t in nonterminals:
            errors.append(Issue(f"{t} is declared terminal but has rules", lineno, col))
        elif t not in terminals:
            warnings.append(Issue(f"terminal {t} has no lexicon entry", lineno, col))
        terminals.add(t)
    for t in sorted(terminals & nonterminals):
        errors.append(Issue(f"symbol {t} is used both as terminal and nonterminal"))
    if EOF in terminals:
        errors.append(Issue(f"{EOF!r} is reserved"))

    if not raw_rules:
        errors.append(Issue("empty rule set"))
    if start is None:
        errors.append(Issue("missing %start declaration"))
    elif raw_rules and start not in nonterminals:
        errors.append(Issue(f"start symbol {start} has no rules"))

    known = nonterminals | terminals
    rules: list[Rule] = []
    seen: dict[tuple[str, tuple[str, ...]], int] = {}
    for lhs, rhs, lineno, cols in raw_rules:
        for sym, col in zip(rhs, cols):
            if sym not in known:
                errors.append(Issue(f"undeclared symbol {sym}", lineno, col))
        key = (lhs, rhs)
        if key in seen:
            warnings.append(Issue(f"duplicate rule {lhs} -> {' '.join(rhs)} (first on line {seen[key]})", lineno))
            continue
        seen[key] = lineno
        rules.append(Rule(lhs, rhs, len(rules)))

    root_names: list[str] = []
    for r, lineno, col in roots:
        if r not in nonterminals:
            errors.append(Issue(f"fragment root {r} is not a nonterminal", lineno, col))
        elif r not in root_names:
            root_names.append(r)
    if start is not None and start not in root_names:
        root_names.insert(0, start)

    if errors:
        raise GrammarError(errors)

    used = {s for r in rules for s in r.rhs}
    for lhs in sorted(nonterminals - used - {start}):
        if lhs not in root_names:
            warnings.append(Issue(f"nonterminal {lhs} is unreachable"))

    assert start is not None
    return Grammar(
        rules=tuple(rules),
        start=start,
        fragment_roots=frozenset(root_names),
        lexicon={w: frozenset(ts) for w, ts in lexicon.items()},
        substitutions={w: tuple(rs) for w, rs in subs.items()},
        terminals=frozenset(terminals),
        nonterminals=frozenset(nonterminals),
        warnings=tuple(warnings),
    )


def dump_grammar(g: Grammar) -> str:
    """Serialize the user-visible part of ``g`` in the grammar file format."""
    out = [f"%start {g.user_start}"]
    roots = sorted(g.fragment_roots - {g.user_start})
    out.append("%fragment " + " ".join([g.user_start, *roots]))
    lexical = {t for ts in g.lexicon.values() for t in ts}
    extra = sorted(g.terminals - lexical)
    if extra:
        out.append("%terminals " + " ".join(extra))
    out.extend(str(r) for r in g.user_rules)
    for word in sorted(g.lexicon):
        out.append(f"{word} : {' '.join(sorted(g.lexicon[word]))}")
    for heard in sorted(g.substitutions):
        out.extend(f"{heard} => {r}" for r in g.substitutions[heard])
    return "\n".join(out) + "\n"


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def augment(g: Grammar) -> Grammar:
    """Add the internal fragment-sequencing rules.

    ``START' -> FRAGS``, ``FRAGS -> FRAGS FRAG``, ``FRAGS -> FRAG`` and one
    ``FRAG -> R`` per fragment root.  Already augmented grammars are
    returned unchanged.
    """
    if g.augmented:
        return g
    taken = set(g.terminals | g.nonterminals)
    names = Internals(
        start=_fresh("START'", taken),
        frags=_fresh("FRAGS", taken),
        frag=_fresh("FRAG", taken),
        user_start=g.start,
    )
    rules = list(g.rules)

    def add(lhs: str, rhs: tuple[str, ...]) -> None:
        rules.append(Rule(lhs, rhs, len(rules), internal=True))

    add(names.start, (names.frags,))
    add(names.frags, (names.frags, names.frag))
    add(names.frags, (names.frag,))
    for root in [g.start, *sorted(g.fragment_roots - {g.start})]:
        add(names.frag, (root,))
    return Grammar(
        rules=tuple(rules),
        start=names.start,
        fragment_roots=g.fragment_roots | {g.start},
        lexicon=g.lexicon,
        substitutions=g.substitutions,
        terminals=g.terminals,
        nonterminals=g.nonterminals | {names.start, names.frags, names.frag},
        internals=names,
        warnings=g.warnings,
    )


@dataclass(frozen=True)
class Reading:
    """One way a token can be shifted: a terminal plus the word that produced it."""

    terminal: str
    surface: str
    substituted: bool = False


@dataclass(frozen=True)
class Alternative:
    surface: str
    terminals: frozenset[str]


@dataclass(frozen=True)
class Token:
    position: int
    surface: str
    terminals: frozenset[str]
    alternatives: tuple[Alternative, ...] = ()

    @property
    def unknown(self) -> bool:
        return not self.terminals

    def readings(self, substitutions: bool = True) -> list[Reading]:
        out = [Reading(t, self.surface) for t in sorted(self.terminals)]
        if substitutions:
            for alt in self.alternatives:
                out.extend(Reading(t, alt.surface, True) for t in sorted(alt.terminals))
        return out


def tokenize(g: Grammar, sentence: Iterable[str]) -> list[Token]:
    tokens = []
    for i, word in enumerate(sentence):
        alts = tuple(
            Alternative(r, g.lexicon.get(r, frozenset()))
            for r in g.substitutions.get(word, ())
        )
        tokens.append(Token(i, word, g.lexicon.get(word, frozenset()), alts))
    return tokens
