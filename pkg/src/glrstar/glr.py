"""Baseline generalized LR parsing over the graph-structured stack.

Each frontier is handled in two phases: every reduction reachable at the
frontier is exhausted first, then all viable shifts of the next word are
made from the frontier's nodes on each of the word's terminal readings.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .grammar import Grammar, Reading, Token
from .gss import Gss, Link, StateNode, SymbolNode
from .table import ParseTable

log = logging.getLogger(__name__)

ACCEPTED, REJECTED = "accepted", "rejected"


@dataclass(frozen=True)
class AcceptRoot:
    """A complete analysis: the fragment-sequence node over ``[0, end)``.

    Words from ``end`` to the end of the sentence were skipped.
    """

    node: SymbolNode
    end: int
    length: int
    log_prob: float = 0.0

    @property
    def trailing(self) -> range:
        return range(self.end, self.length)

    @property
    def skipped_count(self) -> int:
        return self.node.skips + (self.length - self.end)


@dataclass
class ParseOutcome:
    status: str
    accept_roots: list[AcceptRoot]
    tokens: list[Token]
    gss: Gss
    diagnostics: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED


class GlrSession:
    """One parse of one sentence.  Sessions share the table read-only."""

    skipping = False

    def __init__(self, table: ParseTable, tokens: Sequence[Token], substitutions: bool = False):
        self.table = table
        self.tokens = list(tokens)
        self.substitutions = substitutions
        self.gss = Gss(table, len(self.tokens))
        self.frontier_index = 0
        self._max_rhs = max((len(r.rhs) for r in table.grammar.rules), default=0)

    # -- reductions --------------------------------------------------------

    def close_frontier(self, j: int) -> None:
        """Exhaust reductions at frontier ``j``, then prune its forest nodes."""
        gss, table = self.gss, self.table
        rules = table.grammar.rules
        done: set[tuple] = set()
        queue: deque = deque()

        def schedule_node(node: StateNode) -> None:
            for rid, lp in table.reductions(node.state):
                if not rules[rid].rhs:
                    queue.append((node, rid, lp, None))

        def schedule_link(lk: Link) -> None:
            for rid, lp in table.reductions(lk.node.state):
                if rules[rid].rhs:
                    queue.append((lk.node, rid, lp, lk))
            # A path may also reach ``lk`` through same-frontier links sitting
            # above it (empty-span labels); those paths are run here, as
            # nothing scheduled earlier will see the new link.
            chains = [(lk.node, ())]
            for depth in range(1, max_len):
                grown = []
                for top, chain in chains:
                    for up in gss.level_links.get(top.uid, ()):
                        grown.append((up.node, (up,) + chain))
                for node, chain in grown:
                    for rid, lp in table.reductions(node.state):
                        rest = len(rules[rid].rhs) - depth - 1
                        if rest >= 0:
                            for tail in list(gss.paths(lk.pred, rest)):
                                pending.append((node, rid, lp, chain + (lk,) + tail))
                chains = grown
                if not chains:
                    break

        def run(node: StateNode, rid: int, lp: float, path: tuple[Link, ...]) -> None:
            key = (rid, node.uid, tuple(lk.uid for lk in path))
            if key in done:
                return
            done.add(key)
            target, lk, node_new, link_new = gss.reduce_path(node, rid, lp, path)
            if node_new:
                schedule_node(target)
            if link_new:
                schedule_link(lk)

        pending: list = []  # fully specified paths
        max_len = self._max_rhs
        for node in list(gss.frontiers[j]):
            schedule_node(node)
            for lk in node.links.values():
                schedule_link(lk)
        while queue or pending:
            while pending:
                run(*pending.pop())
            if queue:
                node, rid, lp, first = queue.popleft()
                length = len(rules[rid].rhs)
                for path in list(gss.paths(node, length, first)):
                    run(node, rid, lp, path)
        gss.finalize(j)

    # -- shifting ----------------------------------------------------------

    def readings(self, token: Token) -> list[Reading]:
        return token.readings(self.substitutions)

    def shift_origins(self, position: int, readings: list[Reading]) -> list[StateNode]:
        return list(self.gss.frontiers[position])

    def shift_token(self, position: int) -> None:
        readings = self.readings(self.tokens[position])
        if not readings:
            return
        for origin in self.shift_origins(position, readings):
            for reading in readings:
                move = self.table.shift(origin.state, reading.terminal)
                if move is not None:
                    self.gss.push_shift(origin, position, reading, move[0], move[1])

    # -- driver ------------------------------------------------------------

    def accept_roots(self) -> list[AcceptRoot]:
        n = len(self.tokens)
        return self._roots_from(self.gss.frontiers[n])

    def _roots_from(self, nodes) -> list[AcceptRoot]:
        roots = []
        for node in nodes:
            lp = self.table.accept(node.state)
            if lp is None:
                continue
            for lk in node.links.values():
                if lk.pred is self.gss.root:
                    roots.append(AcceptRoot(lk.label, node.frontier, len(self.tokens), lp))
        return roots

    def run(self) -> ParseOutcome:
        n = len(self.tokens)
        self.close_frontier(0)
        for p in range(n):
            self.frontier_index = p
            self.shift_token(p)
            for node in self.gss.frontiers[p]:
                node.active = False
            self.frontier_index = p + 1
            if not self.skipping and not self.gss.frontiers[p + 1]:
                log.debug("no live stacks after word %d", p)
                return self._outcome([])
            self.close_frontier(p + 1)
        return self._outcome(self.accept_roots())

    def _outcome(self, roots: list[AcceptRoot]) -> ParseOutcome:
        gss = self.gss
        diagnostics = {
            "live_nodes": gss.live_counts(),
            "symbol_nodes": len(gss.symbols),
            "alternatives": sum(len(s.alternatives) for s in gss.symbols.values()),
        }
        return ParseOutcome(ACCEPTED if roots else REJECTED, roots, self.tokens, gss, diagnostics)


def parse(g: Grammar, t: ParseTable, tokens: Sequence[Token], substitutions: bool = False) -> ParseOutcome:
    """Plain GLR parse: no word is ever skipped."""
    if t.grammar is not g and t.grammar_hash != g.digest:
        raise ValueError("table was not built from this grammar")
    return GlrSession(t, tokens, substitutions).run()


def accepts(g: Grammar, t: ParseTable, tokens: Sequence[Token]) -> bool:
    return parse(g, t, tokens).accepted
