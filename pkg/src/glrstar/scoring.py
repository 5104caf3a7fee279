"""Penalty features, their linear combination, and best-parse extraction.

Every feature is a sum over parts of a tree (skipped words sit on leaves,
fragments on fragment nodes, action probabilities on every node), so the
best candidates can be pulled out of the packed forest bottom-up without
unpacking it.  Candidates are ranked on exact rational values of their
penalties so that ties are real ties and the tie-breaking order is the same
however the sum was accumulated.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .glr import AcceptRoot
from .grammar import Grammar
from .gss import SymbolNode
from .trees import Tree, format_fragments, fragments, tree_from_order

FULL, SKIP_ONLY = "full", "skip_only"
MODES = (FULL, SKIP_ONLY)


@dataclass(frozen=True)
class FeatureWeights:
    w_sub: float = 0.9
    w_frag: float = 1.1
    w_stat: float = 0.1
    skip_lo: float = 0.95
    skip_hi: float = 1.05

    def __post_init__(self) -> None:
        if min(self.w_sub, self.w_frag, self.w_stat, self.skip_lo, self.skip_hi) < 0:
            raise ValueError("feature weights must be >= 0")
        if self.skip_lo > self.skip_hi:
            raise ValueError("skip_lo must not exceed skip_hi")

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureWeights":
        names = cls.__dataclass_fields__
        return cls(**{k: float(v) for k, v in d.items() if k in names})

    def scaled(self, factor: float) -> "FeatureWeights":
        return FeatureWeights(*(factor * v for v in asdict(self).values()))


DEFAULT_WEIGHTS = FeatureWeights()


def _skip_exact(i: int, n: int, w: FeatureWeights) -> Fraction:
    lo = Fraction(w.skip_lo)
    if n <= 1:
        return lo
    return lo + (Fraction(w.skip_hi) - lo) * Fraction(i, n - 1)


def skip_penalty(positions: Iterable[int], n: int, w: FeatureWeights = DEFAULT_WEIGHTS) -> float:
    """Sum of per-word penalties rising linearly from skip_lo (first word) to skip_hi (last)."""
    return float(sum((_skip_exact(i, n, w) for i in positions), Fraction(0)))


def stat_penalty(log10_pscore: float, w: FeatureWeights = DEFAULT_WEIGHTS) -> float:
    return w.w_stat * -float(log10_pscore)


@dataclass(frozen=True)
class PenaltyBreakdown:
    skip_penalty: float
    sub_penalty: float
    frag_penalty: float
    stat_penalty: float
    combined: float
    skipped_positions: frozenset[int]
    sub_count: int
    fragment_count: int
    log10_pscore: float
    exact_combined: Fraction = field(repr=False, compare=False, default=Fraction(0))
    exact_neglogp: Fraction = field(repr=False, compare=False, default=Fraction(0))

    @property
    def skipped_count(self) -> int:
        return len(self.skipped_positions)

    def rank_key(self, mode: str = FULL) -> tuple:
        """Ordering used for ranking; lower is better."""
        vec = (self.exact_combined, self.skipped_count, self.fragment_count, self.exact_neglogp)
        return _permute(vec, mode)

    def penalties(self) -> dict[str, float]:
        return {
            "skip": self.skip_penalty,
            "sub": self.sub_penalty,
            "frag": self.frag_penalty,
            "stat": self.stat_penalty,
            "combined": self.combined,
        }


def _permute(vec: tuple, mode: str) -> tuple:
    combined, skips, frags, neglogp = vec
    if mode == FULL:
        return (combined, skips, frags, neglogp)
    if mode == SKIP_ONLY:
        return (skips, combined, frags, neglogp)
    raise ValueError(f"unknown ranking mode {mode!r}")


def combine(
    skipped: Iterable[int],
    sub_count: int,
    fragment_count: int,
    log10_pscore: float | Fraction,
    n: int,
    w: FeatureWeights = DEFAULT_WEIGHTS,
) -> PenaltyBreakdown:
    """Linear combination of the four feature penalties for one candidate.

    ``log10_pscore`` may be given as a Fraction holding the exact sum of the
    action log-probabilities; the float fields are rounded from it.
    """
    skipped = frozenset(skipped)
    skip_exact = sum((_skip_exact(i, n, w) for i in skipped), Fraction(0))
    neglogp = -Fraction(log10_pscore)
    sub_exact = Fraction(w.w_sub) * sub_count
    frag_exact = Fraction(w.w_frag) * fragment_count
    stat_exact = Fraction(w.w_stat) * neglogp
    parts = (float(skip_exact), float(sub_exact), float(frag_exact), float(stat_exact))
    return PenaltyBreakdown(
        *parts,
        combined=parts[0] + parts[1] + parts[2] + parts[3],
        skipped_positions=skipped,
        sub_count=sub_count,
        fragment_count=fragment_count,
        log10_pscore=float(-neglogp),
        exact_combined=skip_exact + sub_exact + frag_exact + stat_exact,
        exact_neglogp=neglogp,
    )


@dataclass(frozen=True)
class ParseCandidate:
    tree: Tree  # includes the internal fragment-sequence nodes
    breakdown: PenaltyBreakdown
    root: AcceptRoot
    order: tuple  # (root index, derivation choices); the final tie-breaker

    @property
    def skipped(self) -> list[int]:
        return sorted(self.breakdown.skipped_positions)

    def substitutions(self) -> list[tuple[int, str, str]]:
        return [(lf.position, lf.heard, lf.word) for lf in self.tree.leaves() if lf.heard is not None]

    def fragments(self, g: Grammar) -> list[Tree]:
        return fragments(self.tree, g)

    def sexpr(self, g: Grammar) -> str:
        return format_fragments(self.tree, g)

    def sort_key(self, mode: str = FULL) -> tuple:
        """Full ranking key, including the final size and order tie-breakers."""
        return self.breakdown.rank_key(mode) + (sum(1 for _ in self.tree.nodes()), self.order)


def tree_features(tree: Tree, g: Grammar, root: AcceptRoot) -> tuple[set[int], int, int, Fraction]:
    """(skipped positions, substitutions, fragments, exact log10 pscore) of one candidate."""
    frag = g.internals.frag if g.internals else None
    skipped = set(root.trailing)
    subs = frags = 0
    logp = Fraction(root.log_prob)
    for node in tree.nodes():
        logp += Fraction(node.log_prob)
        if node.is_leaf:
            skipped.update(node.skipped)
            subs += node.heard is not None
        elif node.label == frag:
            frags += 1
    return skipped, subs, frags, logp


class _Extractor:
    """k-best derivations per forest node under a lexicographic cost vector.

    Costs are (combined, skips, fragments, -log10 pscore), all additive and
    non-negative; remaining ties go to the smaller tree, then to the order
    key.  All of these are compatible with combining children, so keeping k
    entries per node is exact on acyclic forests.  Unit and epsilon cycles
    make the forest a graph, so lists are relaxed until nothing changes; the
    tree-size term makes every trip around a cycle strictly worse, which
    bounds the work.  On cyclic forests the best entry stays exact; lower
    entries may miss trees hidden behind dropped cyclic ones.
    """

    def __init__(self, g: Grammar, tokens, w: FeatureWeights, k: int, mode: str):
        self.g = g
        self.tokens = tokens
        self.n = len(tokens)
        self.w = w
        self.k = k
        self.mode = mode
        self.frag = g.internals.frag if g.internals else None
        self.w_sub = Fraction(w.w_sub)
        self.w_frag = Fraction(w.w_frag)
        self.w_stat = Fraction(w.w_stat)
        self.skip_cost = [_skip_exact(i, self.n, w) for i in range(self.n)]
        self.lists: dict[int, list[tuple]] = {}

    def sort_key(self, entry: tuple) -> tuple:
        vec, size, order, _spine = entry
        return _permute(vec, self.mode) + (size, order)

    def best(self, entries: list[tuple]) -> list[tuple]:
        entries.sort(key=self.sort_key)
        return entries[: self.k]

    def local(self, logp: float, skipped: Iterable[int] = (), subs: int = 0, frags: int = 0) -> tuple:
        neglogp = -Fraction(logp)
        skipped = list(skipped)
        combined = (
            sum((self.skip_cost[i] for i in skipped), Fraction(0))
            + self.w_sub * subs
            + self.w_frag * frags
            + self.w_stat * neglogp
        )
        return (combined, len(skipped), frags, neglogp)

    def node_list(self, sym: SymbolNode) -> list[tuple]:
        # An entry's spine holds the nodes with this node's span on its
        # paths downwards; a derivation containing its own root is dropped,
        # so only trees that never repeat a node on a path are produced.
        frags = 1 if sym.symbol == self.frag else 0
        result = []
        for i, alt in enumerate(sym.alternatives):
            partial = [(self.local(alt.log_prob, frags=frags), 1, (), frozenset((sym.uid,)))]
            for child in alt.children:
                same_span = child.start == sym.start and child.end == sym.end
                combos = []
                for pv, ps, po, psp in partial:
                    for cv, cs, co, csp in self.lists[child.uid]:
                        if same_span and sym.uid in csp:
                            continue
                        combos.append((_add(pv, cv), ps + cs, po + (co,), psp | csp if same_span else psp))
                partial = self.best(combos)
                if not partial:
                    break
            result.extend((vec, size, (i,) + order, spine) for vec, size, order, spine in partial)
        return self.best(result)

    def solve(self, roots: Sequence[AcceptRoot]) -> None:
        seen: dict[int, SymbolNode] = {}
        stack = [r.node for r in roots]
        while stack:
            sym = stack.pop()
            if sym.uid in seen:
                continue
            seen[sym.uid] = sym
            for alt in sym.alternatives:
                stack.extend(alt.children)
        inner = []
        for sym in seen.values():
            if sym.terminal:
                alt = sym.alternatives[0]
                self.lists[sym.uid] = [
                    (self.local(alt.log_prob, alt.skipped_positions, int(alt.substituted)), 1, (), frozenset())
                ]
            else:
                self.lists[sym.uid] = []
                inner.append(sym)
        # children have spans inside their parent's and are usually older
        inner.sort(key=lambda s: (s.end - s.start, s.uid))
        changed = True
        while changed:
            changed = False
            for sym in inner:
                new = self.node_list(sym)
                if new != self.lists[sym.uid]:
                    self.lists[sym.uid] = new
                    changed = True

    def roots(self, roots: Sequence[AcceptRoot]) -> list[tuple]:
        self.solve(roots)
        entries = []
        for i, root in enumerate(roots):
            base = self.local(root.log_prob, root.trailing)
            entries.extend((_add(base, vec), size, (i, order), spine)
                           for vec, size, order, spine in self.lists[root.node.uid])
        return self.best(entries)


def _add(a: tuple, b: tuple) -> tuple:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def best_candidates(
    roots: Sequence[AcceptRoot],
    g: Grammar,
    tokens: Sequence,
    w: FeatureWeights = DEFAULT_WEIGHTS,
    n_best: int = 1,
    mode: str = FULL,
) -> list[ParseCandidate]:
    """The ``n_best`` lowest-penalty candidates, best first.

    ``mode="skip_only"`` ranks by number of skipped words first, then by the
    full combined score.  Remaining ties go to fewer skips, fewer fragments,
    higher pscore, fewer tree nodes, then forest order.
    """
    if n_best < 1:
        raise ValueError("n_best must be >= 1")
    if mode not in MODES:
        raise ValueError(f"unknown ranking mode {mode!r}")
    if not roots:
        return []
    ex = _Extractor(g, tokens, w, n_best, mode)
    out = []
    for vec, _size, order, _spine in ex.roots(roots):
        root = roots[order[0]]
        tree = tree_from_order(root.node, order[1], tokens)
        skipped, subs, frags, logp = tree_features(tree, g, root)
        b = combine(skipped, subs, frags, logp, len(tokens), w)
        assert b.exact_combined == vec[0] and b.skipped_count == vec[1], "forest bookkeeping mismatch"
        out.append(ParseCandidate(tree, b, root, order))
    return out


def load_weights(path) -> tuple[FeatureWeights, dict]:
    """Read a weights JSON file; returns the feature weights and the raw dict."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("weights file must hold a JSON object")
    return FeatureWeights.from_dict(raw), raw
