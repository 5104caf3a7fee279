"""Unpacked parse trees, S-expression I/O and forest unpacking."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .grammar import Grammar
from .gss import SymbolNode


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple["Tree", ...] = ()
    rule_id: int | None = None
    log_prob: float = 0.0  # the shift or reduce action that built this node
    word: str | None = None  # leaves only: the word actually parsed
    heard: str | None = None  # leaves only: the input word, if it was substituted
    position: int | None = None
    skipped: tuple[int, ...] = ()  # leaves only: positions skipped just before

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def leaves(self) -> Iterator["Tree"]:
        if self.is_leaf:
            yield self
        for c in self.children:
            yield from c.leaves()

    def nodes(self) -> Iterator["Tree"]:
        yield self
        for c in self.children:
            yield from c.nodes()

    def __str__(self) -> str:
        return format_tree(self)


def format_tree(t: Tree) -> str:
    if t.is_leaf:
        return f"({t.label} {t.word})"
    if not t.children:
        return f"({t.label})"
    return f"({t.label} {' '.join(format_tree(c) for c in t.children)})"


def fragments(t: Tree, g: Grammar) -> list[Tree]:
    """Strip the internal fragment-sequencing nodes, leaving the fragment trees."""
    if g.internals is None or t.label not in (g.internals.frags, g.internals.frag, g.internals.start):
        return [t]
    out: list[Tree] = []
    for c in t.children:
        out.extend(fragments(c, g))
    return out


def format_fragments(t: Tree, g: Grammar) -> str:
    return " ".join(format_tree(f) for f in fragments(t, g))


_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


class SexprError(ValueError):
    pass


def parse_sexprs(text: str) -> list[Tree]:
    """Read one or more trees written as ``(S (NP (det the) (n dog)) ...)``.

    A list whose only element after the label is an atom is a leaf
    ``(terminal word)``; ``(X)`` is an empty constituent.
    """
    tokens = _TOKEN_RE.findall(text)
    pos = 0
    position = 0

    def read() -> Tree:
        nonlocal pos, position
        if pos >= len(tokens) or tokens[pos] != "(":
            raise SexprError(f"expected '(' at token {pos}")
        pos += 1
        if pos >= len(tokens) or tokens[pos] in "()":
            raise SexprError(f"expected a label at token {pos}")
        label = tokens[pos]
        pos += 1
        if pos < len(tokens) and tokens[pos] not in "()":
            word = tokens[pos]
            pos += 1
            if pos >= len(tokens) or tokens[pos] != ")":
                raise SexprError(f"leaf ({label} {word} ...) has extra material")
            pos += 1
            leaf = Tree(label, word=word, position=position)
            position += 1
            return leaf
        children = []
        while pos < len(tokens) and tokens[pos] == "(":
            children.append(read())
        if pos >= len(tokens) or tokens[pos] != ")":
            raise SexprError("unbalanced parentheses")
        pos += 1
        return Tree(label, tuple(children))

    trees = []
    while pos < len(tokens):
        trees.append(read())
    if not trees:
        raise SexprError("no tree found")
    return trees


# -- forest unpacking ------------------------------------------------------


def leaf_tree(node: SymbolNode) -> Tree:
    alt = node.alternatives[0]
    return Tree(
        node.symbol,
        log_prob=alt.log_prob,
        word=alt.surface,
        heard=None,
        position=alt.position,
        skipped=tuple(sorted(alt.skipped_positions)),
    )


def tree_from_order(node: SymbolNode, order: tuple, tokens=None) -> Tree:
    """Rebuild the derivation picked by ``order`` (alternative index, then children)."""
    if node.terminal:
        t = leaf_tree(node)
        if tokens is not None and node.alternatives[0].substituted:
            t = Tree(t.label, log_prob=t.log_prob, word=t.word, heard=tokens[t.position].surface,
                     position=t.position, skipped=t.skipped)
        return t
    alt = node.alternatives[order[0]]
    kids = tuple(tree_from_order(c, o, tokens) for c, o in zip(alt.children, order[1:]))
    return Tree(node.symbol, kids, rule_id=alt.rule_id, log_prob=alt.log_prob)


def iter_orders(node: SymbolNode, _path: frozenset = frozenset()) -> Iterator[tuple]:
    """Every derivation under ``node``, as order keys, in increasing order.

    In a cyclic forest only trees that never repeat a node along a
    root-to-leaf path are produced, which keeps the set finite.
    """
    if node.terminal:
        yield ()
        return
    if node.uid in _path:
        return
    path = _path | {node.uid}
    for i, alt in enumerate(node.alternatives):
        yield from _iter_children(alt.children, (i,), path)


def _iter_children(children, prefix: tuple, path: frozenset) -> Iterator[tuple]:
    if not children:
        yield prefix
        return
    for o in iter_orders(children[0], path):
        yield from _iter_children(children[1:], prefix + (o,), path)


def count_trees(node: SymbolNode, memo: dict | None = None) -> int:
    """Number of trees :func:`iter_orders` would produce.

    Polynomial on acyclic forests; on forests with unit or epsilon cycles
    the path-dependent part is exponential, so prefer a capped
    ``itertools.islice(iter_orders(node), limit)`` there.
    """
    return _count(node, {} if memo is None else memo, frozenset())[0]


def _count(node: SymbolNode, memo: dict, path: frozenset) -> tuple[int, bool]:
    """(count, whether the result depended on ``path``)."""
    if node.terminal:
        return 1, False
    if node.uid in path:
        return 0, True
    if node.uid in memo:
        return memo[node.uid], False
    inner = path | {node.uid}
    total, dependent = 0, False
    for alt in node.alternatives:
        prod = 1
        for c in alt.children:
            n, dep = _count(c, memo, inner)
            dependent |= dep
            prod *= n
        total += prod
    if not dependent:
        memo[node.uid] = total
    return total, dependent
