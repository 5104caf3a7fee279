"""Probabilistic LR disambiguation: action probabilities trained from gold trees.

A gold tree fixes a unique sequence of LR actions.  Counting those actions
per state over a treebank and normalising within each state gives
p(action | state); the score of a parse is the product of the
probabilities of the actions that build it.
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from typing import Iterable, Sequence

from .grammar import Grammar
from .table import ACCEPT, REDUCE, SHIFT, LOG10_FLOOR, ParseAction, ParseTable, with_probabilities
from .trees import Tree

Step = tuple[int, tuple]  # (state, action identity)


class DerivationError(ValueError):
    pass


def _replay(t: ParseTable, frags: Sequence[Tree]) -> list[tuple[int, ParseAction]]:
    """LR actions (with the state they are taken in) that build ``frags``."""
    g = t.grammar
    if g.internals is None:
        raise DerivationError("table grammar is not augmented")
    rule_index = {(r.lhs, r.rhs): r for r in g.rules}
    trace: list[tuple[int, ParseAction]] = []
    stack = [0]

    def act(kind: str, match) -> ParseAction:
        state = stack[-1]
        for a in t.state_actions(state).values():
            if a.kind == kind and match(a):
                trace.append((state, a))
                return a
        raise DerivationError(f"no {kind} action in state {state}")

    def reduce(lhs: str, rhs: tuple[str, ...]) -> None:
        rule = rule_index.get((lhs, rhs))
        if rule is None:
            raise DerivationError(f"rule {lhs} -> {' '.join(rhs)} is not in the grammar")
        act(REDUCE, lambda a: a.rule_id == rule.rule_id)
        if rhs:
            del stack[-len(rhs):]
        target = t.goto(stack[-1], lhs)
        if target is None:
            raise DerivationError(f"no goto on {lhs} from state {stack[-1]}")
        stack.append(target)

    def walk(node: Tree) -> None:
        if node.is_leaf:
            target = t.shift(stack[-1], node.label)
            if target is None:
                raise DerivationError(f"cannot shift {node.label} ({node.word}) in state {stack[-1]}")
            act(SHIFT, lambda a: a.target == target[0])
            stack.append(target[0])
            return
        for c in node.children:
            walk(c)
        reduce(node.label, tuple(c.label for c in node.children))

    names = g.internals
    for i, frag in enumerate(frags):
        walk(frag)
        reduce(names.frag, (frag.label,))
        if i == 0:
            reduce(names.frags, (names.frag,))
        else:
            reduce(names.frags, (names.frags, names.frag))
    act(ACCEPT, lambda a: True)
    return trace


def derive_action_sequence(g: Grammar, t: ParseTable, sentence: Sequence[str], gold: Tree | Sequence[Tree]) -> list[Step]:
    """The (state, action) sequence an LR parser follows to build ``gold``."""
    frags = [gold] if isinstance(gold, Tree) else list(gold)
    if not frags:
        raise DerivationError("empty gold tree")
    words = [lf.word for f in frags for lf in f.leaves()]
    if len(words) != len(sentence):
        raise DerivationError(f"tree has {len(words)} leaves but the sentence has {len(sentence)} words")
    for word, leaf in zip(sentence, (lf for f in frags for lf in f.leaves())):
        if leaf.word != word:
            raise DerivationError(f"leaf {leaf.word!r} does not match word {word!r}")
        if leaf.label not in g.lexicon.get(word, ()):
            raise DerivationError(f"{word!r} is not a {leaf.label} in the lexicon")
    for f in frags:
        if f.label not in g.fragment_roots:
            raise DerivationError(f"tree root {f.label} is not a fragment root")
    return [(state, a.identity) for state, a in _replay(t, frags)]


def count_actions(traces: Iterable[Sequence[Step]]) -> Counter:
    counts: Counter = Counter()
    for trace in traces:
        counts.update(trace)
    return counts


def train(t: ParseTable, traces: Iterable[Sequence[Step]], alpha: float = 0.5) -> ParseTable:
    """Annotate every action with a smoothed log10 p(action | state).

    p = (count + alpha) / (state total + alpha * number of actions); states
    never seen in training get the uniform distribution.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    counts = count_actions(traces)
    log_probs: dict[tuple[int, tuple], float] = {}
    for state in range(len(t.states)):
        actions = list(t.state_actions(state))
        if not actions:
            continue
        total = sum(counts[(state, a)] for a in actions)
        for a in actions:
            if total == 0:
                p = 1.0 / len(actions)
            else:
                p = (counts[(state, a)] + alpha) / (total + alpha * len(actions))
            log_probs[(state, a)] = math.log10(p) if p > 0 else -math.inf
    return with_probabilities(t, log_probs)


def pscore_of(tree: Tree, accept_log_prob: float = 0.0) -> float:
    """log10 pscore from the probabilities recorded on the tree's nodes."""
    return float(sum((Fraction(n.log_prob) for n in tree.nodes()), Fraction(accept_log_prob)))


def replay_log10_pscore(t: ParseTable, frags: Sequence[Tree]) -> float:
    """log10 pscore recomputed from scratch by replaying the LR actions."""
    total = Fraction(0)
    for _state, a in _replay(t, frags):
        lp = 0.0 if a.log_prob is None else max(a.log_prob, LOG10_FLOOR)
        total += Fraction(lp)
    return float(total)
