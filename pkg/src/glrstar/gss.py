"""Graph-structured stack and shared packed parse forest.

State nodes are shared per (state, frontier).  Every link between two state
nodes carries one symbol node, and a symbol node is identified by
(symbol, state it was pushed from, start, end): the state below it fixes
every LR state its derivation passes through, so action probabilities stay
a property of the node.  Reductions that rebuild an existing link add a
packed alternative to its symbol node instead of a new link.

Skip information lives in terminal nodes.  A shift from a node at frontier
``f`` of the word at position ``p`` yields a terminal spanning ``[f, p+1)``
whose skipped positions are ``f .. p-1``; larger constituents inherit their
skips from their children.
"""

from __future__ import annotations

import itertools
from enum import Enum
from typing import Iterator

from .grammar import Reading
from .table import ParseTable


class PackOutcome(Enum):
    MERGED = "merged"
    REPLACED_EXISTING = "replaced_existing"
    DISCARDED_NEW = "discarded_new"


class PackedAlternative:
    """One way of building a symbol node: a rule and its child nodes.

    Terminal nodes have a single alternative with ``rule_id`` None that
    records the word shifted and the positions skipped before it.
    """

    __slots__ = (
        "rule_id", "children", "log_prob", "skipped_count", "skipped_positions",
        "surface", "substituted", "position",
    )

    def __init__(self, rule_id, children=(), log_prob=0.0, *, surface=None,
                 substituted=False, position=None, skipped_positions=frozenset()):
        self.rule_id = rule_id
        self.children = tuple(children)
        self.log_prob = log_prob
        self.surface = surface
        self.substituted = substituted
        self.position = position
        # nonterminal alternatives get both once their frontier is closed
        self.skipped_positions = frozenset(skipped_positions) if rule_id is None else None
        self.skipped_count = len(self.skipped_positions) if rule_id is None else None

    @property
    def key(self) -> tuple:
        return (self.rule_id, tuple(c.uid for c in self.children))

    def __repr__(self) -> str:
        if self.rule_id is None:
            return f"<leaf {self.surface!r}@{self.position} skips={sorted(self.skipped_positions)}>"
        return f"<alt r{self.rule_id} {[c.symbol for c in self.children]} skips={self.skipped_count}>"


class SymbolNode:
    __slots__ = ("uid", "symbol", "left_state", "start", "end", "terminal",
                 "alternatives", "skips", "_keys", "_subs")

    def __init__(self, uid, symbol, left_state, start, end, terminal):
        self.uid = uid
        self.symbol = symbol
        self.left_state = left_state
        self.start = start
        self.end = end
        self.terminal = terminal
        self.alternatives: list[PackedAlternative] = []
        self.skips: int | None = None  # set once the node's frontier is closed
        self._keys: set[tuple] = set()
        self._subs: int | None = None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def skipped(self) -> frozenset[int]:
        for alt in self.alternatives:
            if alt.skipped_positions is not None:
                return alt.skipped_positions
        return frozenset()

    @property
    def sub_count(self) -> int | None:
        """Fewest substitutions over the node's derivations (after finalize)."""
        if self.terminal:
            return int(self.alternatives[0].substituted)
        return self._subs

    def __repr__(self) -> str:
        return f"<{self.symbol}[{self.start},{self.end}) from {self.left_state} alts={len(self.alternatives)}>"


class StateNode:
    __slots__ = ("uid", "state", "frontier", "links", "active", "skips")

    def __init__(self, uid, state, frontier):
        self.uid = uid
        self.state = state
        self.frontier = frontier
        self.links: dict[int, Link] = {}  # keyed by predecessor uid
        self.active = True
        self.skips: int | None = None  # fewest skips on any path from the root

    @property
    def successors(self) -> list[SymbolNode]:
        return [link.label for link in self.links.values()]

    def __repr__(self) -> str:
        return f"<state {self.state}@{self.frontier}>"


class Link:
    __slots__ = ("uid", "node", "pred", "label")

    def __init__(self, uid, node, pred, label):
        self.uid = uid
        self.node = node
        self.pred = pred
        self.label = label


def pack(existing: SymbolNode, new_alt: PackedAlternative) -> PackOutcome:
    """Pack ``new_alt`` into ``existing``, keeping only the fewest-skip analyses.

    Both the node's alternatives and ``new_alt`` must have their
    ``skipped_count`` computed.
    """
    best = min(a.skipped_count for a in existing.alternatives)
    if new_alt.skipped_count > best:
        return PackOutcome.DISCARDED_NEW
    if new_alt.skipped_count < best:
        existing.alternatives = [new_alt]
        existing._keys = {new_alt.key}
        return PackOutcome.REPLACED_EXISTING
    existing.alternatives.append(new_alt)
    existing._keys.add(new_alt.key)
    return PackOutcome.MERGED


_NO_POSITIONS: frozenset[int] = frozenset()


class Gss:
    """Arena holding one parse session's stack and forest."""

    def __init__(self, table: ParseTable, length: int):
        self.table = table
        self.length = length
        self.nodes: dict[tuple[int, int], StateNode] = {}
        self.frontiers: list[list[StateNode]] = [[] for _ in range(length + 1)]
        self.symbols: dict[tuple, SymbolNode] = {}
        self.ending: list[list[SymbolNode]] = [[] for _ in range(length + 1)]
        # links between two nodes of one frontier (empty-span labels), by pred uid
        self.level_links: dict[int, list[Link]] = {}
        self._noisy = False  # set once any leaf skips words or is substituted
        self._uids = itertools.count()
        self.root, _ = self.state_node(0, 0)
        self.root.skips = 0

    # -- construction ------------------------------------------------------

    def state_node(self, state: int, frontier: int) -> tuple[StateNode, bool]:
        node = self.nodes.get((state, frontier))
        if node is not None:
            return node, False
        node = StateNode(next(self._uids), state, frontier)
        self.nodes[(state, frontier)] = node
        self.frontiers[frontier].append(node)
        return node, True

    def symbol_node(self, symbol: str, left_state: int, start: int, end: int,
                    terminal: bool = False) -> tuple[SymbolNode, bool]:
        key = (symbol, left_state, start, end)
        node = self.symbols.get(key)
        if node is not None:
            return node, False
        node = SymbolNode(next(self._uids), symbol, left_state, start, end, terminal)
        self.symbols[key] = node
        self.ending[end].append(node)
        return node, True

    def link(self, node: StateNode, pred: StateNode, label: SymbolNode) -> tuple[Link, bool]:
        existing = node.links.get(pred.uid)
        if existing is not None:
            return existing, False
        lk = Link(next(self._uids), node, pred, label)
        node.links[pred.uid] = lk
        if node.frontier == pred.frontier:
            self.level_links.setdefault(pred.uid, []).append(lk)
        return lk, True

    def add_alternative(self, node: SymbolNode, alt: PackedAlternative) -> bool:
        """Merge ``alt`` into ``node`` unless it duplicates an existing one.

        Unit and epsilon rules can make a node its own descendant (e.g.
        S -> A, A -> S over one span); such alternatives are kept, so the
        forest may contain cycles.  Skip-count pruning is deferred to
        :meth:`finalize`, once every alternative's children are complete.
        """
        key = alt.key
        if key in node._keys:
            return False
        node._keys.add(key)
        node.alternatives.append(alt)
        return True

    def push_shift(self, origin: StateNode, position: int, reading: Reading,
                   to_state: int, log_prob: float = 0.0) -> StateNode:
        """Shift the word at ``position`` from ``origin``.

        When ``origin`` lies on an earlier frontier the words in between are
        recorded as skipped on the new terminal node.
        """
        end = position + 1
        label, _ = self.symbol_node(reading.terminal, origin.state, origin.frontier, end, terminal=True)
        leaf = PackedAlternative(
            None, (), log_prob, surface=reading.surface, substituted=reading.substituted,
            position=position, skipped_positions=range(origin.frontier, position),
        )
        if origin.frontier < position or reading.substituted:
            self._noisy = True
        if not label.alternatives:
            label.alternatives.append(leaf)
        elif label.alternatives[0].substituted and not reading.substituted:
            label.alternatives[0] = leaf
        node, _ = self.state_node(to_state, end)
        self.link(node, origin, label)
        return node

    def paths(self, node: StateNode, length: int, first: Link | None = None) -> Iterator[tuple[Link, ...]]:
        """Every chain of ``length`` links leading back from ``node``."""
        if length == 0:
            yield ()
            return
        starts = [first] if first is not None else list(node.links.values())
        for lk in starts:
            if length == 1:
                yield (lk,)
            else:
                for rest in self.paths(lk.pred, length - 1):
                    yield (lk,) + rest

    def reduce_path(self, over: StateNode, rule_id: int, log_prob: float,
                    path: tuple[Link, ...]) -> tuple[StateNode, Link, bool, bool]:
        """Reduce ``rule_id`` along one path; returns (node, link, node_new, link_new)."""
        rule = self.table.grammar.rules[rule_id]
        bottom = path[-1].pred if path else over
        children = tuple(lk.label for lk in reversed(path))
        target_state = self.table.goto(bottom.state, rule.lhs)
        label, _ = self.symbol_node(rule.lhs, bottom.state, bottom.frontier, over.frontier)
        self.add_alternative(label, PackedAlternative(rule_id, children, log_prob))
        node, node_new = self.state_node(target_state, over.frontier)
        lk, link_new = self.link(node, bottom, label)
        return node, lk, node_new, link_new

    def reduce(self, over: StateNode, rule_id: int, log_prob: float = 0.0) -> list[StateNode]:
        """Reduce ``rule_id`` along every path from ``over``."""
        length = len(self.table.grammar.rules[rule_id].rhs)
        out = []
        for path in list(self.paths(over, length)):
            node, *_ = self.reduce_path(over, rule_id, log_prob, path)
            if node not in out:
                out.append(node)
        return out

    # -- frontier closing --------------------------------------------------

    def _finalize_symbols(self, frontier: int) -> None:
        """Skip and substitution counts for the symbol nodes ending at ``frontier``.

        Nodes sharing a span may form cycles, so counts are relaxed to a
        fixed point instead of computed recursively; they are non-negative,
        so going around a cycle never lowers them.
        """
        pending = [s for s in self.ending[frontier] if s.skips is None]
        inf = float("inf")
        for s in pending:
            if s.terminal:
                s.skips = s.alternatives[0].skipped_count
        inner = [s for s in pending if not s.terminal]
        if not self._noisy:
            # nothing skipped or substituted anywhere yet: every count is zero
            for s in inner:
                s.skips, s._subs = 0, 0
                for alt in s.alternatives:
                    alt.skipped_count, alt.skipped_positions = 0, _NO_POSITIONS
            return
        best = {s.uid: (inf, inf) for s in inner}

        def counts(c: SymbolNode) -> tuple:
            if c.skips is not None:
                return (c.skips, c.sub_count)
            return best[c.uid]

        changed = True
        while changed:
            changed = False
            for s in inner:
                for alt in s.alternatives:
                    k, u = 0, 0
                    for c in alt.children:
                        ck, cu = counts(c)
                        k, u = k + ck, u + cu
                    bk, bu = best[s.uid]
                    if k < bk or u < bu:
                        best[s.uid] = (min(k, bk), min(u, bu))
                        changed = True
        for s in inner:
            for alt in s.alternatives:
                alt.skipped_count = sum(counts(c)[0] for c in alt.children)
            alts = s.alternatives
            s.alternatives = [alts[0]]
            s._keys = {alts[0].key}
            for alt in alts[1:]:
                pack(s, alt)
        for s in inner:
            s.skips, s._subs = best[s.uid]
        # Positions: an alternative gets its set once all its children have one.
        todo = [alt for s in inner for alt in s.alternatives]
        while todo:
            left = []
            for alt in todo:
                if all(c.terminal or any(a.skipped_positions is not None for a in c.alternatives)
                       for c in alt.children):
                    alt.skipped_positions = frozenset().union(*(c.skipped for c in alt.children))
                else:
                    left.append(alt)
            if len(left) == len(todo):
                raise RuntimeError("symbol node without a finite derivation")
            todo = left

    def finalize(self, frontier: int) -> None:
        """Prune symbol nodes ending at ``frontier`` and compute stack skip counts."""
        self._finalize_symbols(frontier)
        nodes = self.frontiers[frontier]
        inf = float("inf")
        for node in nodes:
            if node is self.root:
                continue
            node.skips = inf
        changed = True
        while changed:
            changed = False
            for node in nodes:
                for lk in node.links.values():
                    pred_skips = lk.pred.skips if lk.pred.skips is not None else inf
                    cand = pred_skips + lk.label.skips
                    if cand < node.skips:
                        node.skips = cand
                        changed = True

    # -- inspection --------------------------------------------------------

    def live_counts(self) -> list[int]:
        return [len(f) for f in self.frontiers]

    def to_dot(self) -> str:
        """Graphviz rendering of state nodes, links and their symbol nodes."""
        out = ["digraph gss {", "  rankdir=RL;"]
        for node in self.nodes.values():
            out.append(f'  s{node.uid} [shape=circle,label="{node.state}@{node.frontier}"];')
        for sym in self.symbols.values():
            out.append(
                f'  y{sym.uid} [shape=box,label="{_dot_escape(sym.symbol)} [{sym.start},{sym.end}) '
                f'skips={sym.skips}"];'
            )
            for i, alt in enumerate(sym.alternatives):
                for c in alt.children:
                    out.append(f'  y{sym.uid} -> y{c.uid} [style=dotted,label="{i}"];')
        for node in self.nodes.values():
            for lk in node.links.values():
                out.append(f"  s{node.uid} -> y{lk.label.uid};")
                out.append(f"  y{lk.label.uid} -> s{lk.pred.uid};")
        out.append("}")
        return "\n".join(out) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
