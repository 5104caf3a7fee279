"""LR(0) item sets and the multi-valued action/goto table.

Reduce actions are placed in every terminal column and in the end-of-input
column of a state holding a completed item.  Without lookahead filtering a
reduction never depends on the next word, so reductions done before a word
is skipped stay valid after it is skipped.  Conflicting cells are kept as
they are; the GLR engine pursues every entry.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field, replace
from typing import Iterable

from .grammar import EOF, Grammar, augment, dump_grammar, load_grammar

MAGIC = b"GLRT"
FORMAT_VERSION = 1

SHIFT, REDUCE, ACCEPT = "shift", "reduce", "accept"
_KIND_CODES = {SHIFT: 0, REDUCE: 1, ACCEPT: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

# Zero-probability actions (possible when training without smoothing) are
# scored as this log10 probability rather than -inf.
LOG10_FLOOR = -300.0


class TableError(Exception):
    pass


class CorruptTableError(TableError):
    pass


class GrammarMismatchError(TableError):
    pass


@dataclass(frozen=True, order=True)
class LrItem:
    rule_id: int
    dot: int


@dataclass(frozen=True)
class LrState:
    state_id: int
    items: frozenset[LrItem]


@dataclass(frozen=True)
class ParseAction:
    kind: str
    target: int | None = None  # shift target state
    rule_id: int | None = None  # reduced rule
    log_prob: float | None = None  # log10 probability, None until trained

    @property
    def identity(self) -> tuple:
        """What the action does, independent of its column and probability."""
        if self.kind == REDUCE:
            return (REDUCE, self.rule_id)
        if self.kind == SHIFT:
            return (SHIFT, self.target)
        return (ACCEPT,)


@dataclass(eq=False)
class ParseTable:
    grammar: Grammar
    states: list[LrState]
    actions: dict[tuple[int, str], tuple[ParseAction, ...]]
    gotos: dict[tuple[int, str], int]
    grammar_hash: str
    _shift: list[dict[str, tuple[int, float]]] = field(init=False, repr=False)
    _reduce: list[tuple[tuple[int, float], ...]] = field(init=False, repr=False)
    _accept: list[float | None] = field(init=False, repr=False)
    _distinct: list[dict[tuple, ParseAction]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = len(self.states)
        self._shift = [{} for _ in range(n)]
        reduces: list[dict[int, float]] = [{} for _ in range(n)]
        self._accept = [None] * n
        self._distinct = [{} for _ in range(n)]
        for (state, column), cell in self.actions.items():
            for a in cell:
                self._distinct[state].setdefault(a.identity, a)
                lp = 0.0 if a.log_prob is None else max(a.log_prob, LOG10_FLOOR)
                if a.kind == SHIFT:
                    self._shift[state][column] = (a.target, lp)
                elif a.kind == REDUCE:
                    reduces[state][a.rule_id] = lp
                else:
                    self._accept[state] = lp
        self._reduce = [tuple(sorted(r.items())) for r in reduces]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParseTable):
            return NotImplemented
        return (
            self.states == other.states
            and self.actions == other.actions
            and self.gotos == other.gotos
            and self.grammar_hash == other.grammar_hash
        )

    def shift(self, state: int, terminal: str) -> tuple[int, float] | None:
        """(target, log10 prob) of the shift on ``terminal``, if any."""
        return self._shift[state].get(terminal)

    def reductions(self, state: int) -> tuple[tuple[int, float], ...]:
        """(rule_id, log10 prob) for every reduction in ``state``."""
        return self._reduce[state]

    def accept(self, state: int) -> float | None:
        return self._accept[state]

    def goto(self, state: int, nonterminal: str) -> int | None:
        return self.gotos.get((state, nonterminal))

    def state_actions(self, state: int) -> dict[tuple, ParseAction]:
        """Distinct actions of a state keyed by identity (reduces appear once)."""
        return self._distinct[state]

    @property
    def trained(self) -> bool:
        return any(a.log_prob is not None for cell in self.actions.values() for a in cell)


def _closure(g: Grammar, kernel: Iterable[LrItem], by_lhs: dict[str, list[int]]) -> frozenset[LrItem]:
    items = set(kernel)
    todo = list(items)
    while todo:
        item = todo.pop()
        rhs = g.rules[item.rule_id].rhs
        if item.dot < len(rhs):
            for rid in by_lhs.get(rhs[item.dot], ()):
                new = LrItem(rid, 0)
                if new not in items:
                    items.add(new)
                    todo.append(new)
    return frozenset(items)


def build_table(g: Grammar) -> ParseTable:
    """Canonical LR(0) collection with every conflict retained."""
    if not g.augmented:
        raise TableError("build_table needs an augmented grammar")
    by_lhs: dict[str, list[int]] = {}
    for r in g.rules:
        by_lhs.setdefault(r.lhs, []).append(r.rule_id)
    start_rules = by_lhs.get(g.start, [])
    if not start_rules:
        raise TableError(f"start symbol {g.start} has no rules")

    first = _closure(g, [LrItem(rid, 0) for rid in start_rules], by_lhs)
    index = {first: 0}
    item_sets = [first]
    transitions: list[dict[str, int]] = []
    i = 0
    while i < len(item_sets):
        items = item_sets[i]
        moves: dict[str, list[LrItem]] = {}
        for item in sorted(items):
            rhs = g.rules[item.rule_id].rhs
            if item.dot < len(rhs):
                moves.setdefault(rhs[item.dot], []).append(LrItem(item.rule_id, item.dot + 1))
        out = {}
        for sym, kernel in moves.items():
            target = _closure(g, kernel, by_lhs)
            if target not in index:
                index[target] = len(item_sets)
                item_sets.append(target)
            out[sym] = index[target]
        transitions.append(out)
        i += 1

    columns = sorted(g.terminals) + [EOF]
    actions: dict[tuple[int, str], list[ParseAction]] = {}
    gotos: dict[tuple[int, str], int] = {}
    for sid, items in enumerate(item_sets):
        for sym, target in transitions[sid].items():
            if sym in g.nonterminals:
                gotos[(sid, sym)] = target
            else:
                actions.setdefault((sid, sym), []).append(ParseAction(SHIFT, target=target))
        for item in sorted(items):
            rule = g.rules[item.rule_id]
            if item.dot != len(rule.rhs):
                continue
            if rule.lhs == g.start:
                actions.setdefault((sid, EOF), []).append(ParseAction(ACCEPT))
                continue
            for col in columns:
                actions.setdefault((sid, col), []).append(ParseAction(REDUCE, rule_id=rule.rule_id))

    return ParseTable(
        grammar=g,
        states=[LrState(sid, items) for sid, items in enumerate(item_sets)],
        actions={k: tuple(v) for k, v in actions.items()},
        gotos=gotos,
        grammar_hash=g.digest,
    )


def table_stats(t: ParseTable) -> dict[str, int]:
    return {
        "state_count": len(t.states),
        "cell_count": len(t.actions),
        "conflict_cell_count": sum(1 for cell in t.actions.values() if len(cell) > 1),
    }


def with_probabilities(t: ParseTable, log_probs: dict[tuple[int, tuple], float]) -> ParseTable:
    """Copy of ``t`` whose actions carry the given (state, identity) log10 probs."""
    actions = {
        (state, col): tuple(replace(a, log_prob=log_probs.get((state, a.identity))) for a in cell)
        for (state, col), cell in t.actions.items()
    }
    return ParseTable(t.grammar, t.states, actions, t.gotos, t.grammar_hash)


# Serialization: MAGIC | u16 version | u32 header length | JSON header |
# u32 body length | u32 crc32(body) | body.  The body is a sequence of
# little-endian records indexed by the symbol list in the header.

_U32 = struct.Struct("<I")
_ITEM = struct.Struct("<IH")
_ACTION = struct.Struct("<IIBiBd")
_GOTO = struct.Struct("<III")


def serialize_table(t: ParseTable) -> bytes:
    symbols = sorted(t.grammar.terminals | t.grammar.nonterminals) + [EOF]
    sym_index = {s: i for i, s in enumerate(symbols)}
    header = {
        "grammar_hash": t.grammar_hash,
        "grammar": dump_grammar(t.grammar),
        "symbols": symbols,
        "state_count": len(t.states),
        "action_count": sum(len(c) for c in t.actions.values()),
        "goto_count": len(t.gotos),
    }
    body = bytearray()
    for st in t.states:
        items = sorted(st.items)
        body += _U32.pack(len(items))
        for it in items:
            body += _ITEM.pack(it.rule_id, it.dot)
    for (state, col), cell in sorted(t.actions.items(), key=lambda kv: (kv[0][0], sym_index[kv[0][1]])):
        for a in cell:
            arg = a.target if a.kind == SHIFT else a.rule_id if a.kind == REDUCE else -1
            has_p = a.log_prob is not None
            body += _ACTION.pack(state, sym_index[col], _KIND_CODES[a.kind], arg, has_p, a.log_prob if has_p else 0.0)
    for (state, nt), target in sorted(t.gotos.items(), key=lambda kv: (kv[0][0], sym_index[kv[0][1]])):
        body += _GOTO.pack(state, sym_index[nt], target)
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    return b"".join([
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        _U32.pack(len(head)),
        head,
        _U32.pack(len(body)),
        _U32.pack(zlib.crc32(body)),
        bytes(body),
    ])


def deserialize_table(data: bytes, grammar: Grammar | None = None) -> ParseTable:
    """Inverse of :func:`serialize_table`.

    The grammar stored in the payload is used unless ``grammar`` is given,
    in which case its hash must match the one recorded in the table.
    """
    try:
        if data[:4] != MAGIC:
            raise CorruptTableError("not a table file (bad magic)")
        (version,) = struct.unpack_from("<H", data, 4)
        if version != FORMAT_VERSION:
            raise CorruptTableError(f"unsupported table format version {version}")
        pos = 6
        (hlen,) = _U32.unpack_from(data, pos)
        pos += 4
        if len(data) < pos + hlen:
            raise CorruptTableError("truncated header")
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
        pos += hlen
        (blen,) = _U32.unpack_from(data, pos)
        (crc,) = _U32.unpack_from(data, pos + 4)
        pos += 8
        body = data[pos:]
        if len(body) != blen:
            raise CorruptTableError(f"body is {len(body)} bytes, expected {blen}")
        if zlib.crc32(body) != crc:
            raise CorruptTableError("body checksum mismatch")
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptTableError(f"corrupt table payload: {e}") from e

    if grammar is None:
        grammar = load_grammar(header["grammar"])
    grammar = augment(grammar)
    if grammar.digest != header["grammar_hash"]:
        raise GrammarMismatchError("table was built from a different grammar")

    symbols = header["symbols"]
    states: list[LrState] = []
    actions: dict[tuple[int, str], list[ParseAction]] = {}
    gotos: dict[tuple[int, str], int] = {}
    pos = 0
    try:
        for sid in range(header["state_count"]):
            (k,) = _U32.unpack_from(body, pos)
            pos += 4
            items = []
            for _ in range(k):
                rid, dot = _ITEM.unpack_from(body, pos)
                pos += _ITEM.size
                items.append(LrItem(rid, dot))
            states.append(LrState(sid, frozenset(items)))
        for _ in range(header["action_count"]):
            state, col, kind, arg, has_p, lp = _ACTION.unpack_from(body, pos)
            pos += _ACTION.size
            name = _KIND_NAMES[kind]
            a = ParseAction(
                name,
                target=arg if name == SHIFT else None,
                rule_id=arg if name == REDUCE else None,
                log_prob=lp if has_p else None,
            )
            actions.setdefault((state, symbols[col]), []).append(a)
        for _ in range(header["goto_count"]):
            state, nt, target = _GOTO.unpack_from(body, pos)
            pos += _GOTO.size
            gotos[(state, symbols[nt])] = target
    except (struct.error, KeyError, IndexError) as e:
        raise CorruptTableError(f"corrupt table body: {e}") from e
    if pos != len(body):
        raise CorruptTableError("trailing bytes after table body")
    return ParseTable(grammar, states, {k: tuple(v) for k, v in actions.items()}, gotos, header["grammar_hash"])
