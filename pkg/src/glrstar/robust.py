"""GLR*: robust parsing by skipping words.

A word can be shifted not only from the current frontier but from any
state node left behind on an earlier one, which amounts to skipping every
word in between.  Reductions done on those older nodes are reused as they
are.  A beam limits which old nodes may serve as skip origins, keeping the
search near the fewest-skip analyses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .grammar import Grammar, Reading, Token
from .glr import AcceptRoot, GlrSession, ParseOutcome
from .gss import StateNode
from .table import ParseTable


@dataclass(frozen=True)
class BeamConfig:
    delta: int = 2  # skips allowed above the current best
    frontier_cap: int = 30  # skip origins considered per word
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.delta < 0 or self.frontier_cap < 0:
            raise ValueError("beam delta and frontier_cap must be >= 0")


def select_skip_origins(
    origins: Sequence[tuple[StateNode, int]], current_best_skips: int, beam: BeamConfig
) -> list[StateNode]:
    """Pick the inactive nodes allowed to shift the current word.

    ``origins`` pairs each node with the skip count a shift from it would
    carry.  Nodes more than ``beam.delta`` skips above the best are dropped;
    of the rest at most ``beam.frontier_cap`` are kept, preferring fewer
    skips, then later frontiers, then lower state ids.
    """
    if not beam.enabled:
        return [node for node, _ in origins]
    limit = current_best_skips + beam.delta
    eligible = [(skips, -node.frontier, node.state, node) for node, skips in origins if skips <= limit]
    eligible.sort(key=lambda e: e[:3])
    return [e[3] for e in eligible[: beam.frontier_cap]]


def expand_substitutions(token: Token) -> list[Reading]:
    """The token's own readings followed by those of its substitutes."""
    return token.readings(substitutions=True)


class RobustSession(GlrSession):
    skipping = True

    def __init__(self, table: ParseTable, tokens: Sequence[Token], beam: BeamConfig = BeamConfig(),
                 substitutions: bool = True):
        super().__init__(table, tokens, substitutions)
        self.beam = beam

    def readings(self, token: Token) -> list[Reading]:
        return expand_substitutions(token) if self.substitutions else token.readings(False)

    def shift_origins(self, position: int, readings: list[Reading]) -> list[StateNode]:
        table = self.table
        terminals = {r.terminal for r in readings}

        def viable(node: StateNode) -> bool:
            return any(table.shift(node.state, t) is not None for t in terminals)

        active = [n for n in self.gss.frontiers[position] if viable(n)]
        inactive = [
            (n, n.skips + position - f)
            for f in range(position)
            for n in self.gss.frontiers[f]
            if viable(n)
        ]
        if not active and not inactive:
            return []
        best = min([n.skips for n in active] + [s for _, s in inactive])
        return active + select_skip_origins(inactive, best, self.beam)

    def accept_roots(self) -> list[AcceptRoot]:
        roots = []
        for f in range(len(self.tokens), -1, -1):
            roots.extend(self._roots_from(self.gss.frontiers[f]))
        if roots and self.beam.enabled:
            best = min(r.skipped_count for r in roots)
            roots = [r for r in roots if r.skipped_count <= best + self.beam.delta]
        return roots


def parse_robust(g: Grammar, t: ParseTable, tokens: Sequence[Token], beam: BeamConfig = BeamConfig(),
                 substitutions: bool = True) -> ParseOutcome:
    """Parse with word skipping; every surviving accept root is returned."""
    if t.grammar is not g and t.grammar_hash != g.digest:
        raise ValueError("table was not built from this grammar")
    return RobustSession(t, tokens, beam, substitutions).run()
