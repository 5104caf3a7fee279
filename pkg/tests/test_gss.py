import random

from glrstar.grammar import Reading, augment, load_grammar, tokenize
from glrstar.gss import Gss, PackedAlternative, PackOutcome, SymbolNode, pack
from glrstar.robust import BeamConfig, parse_robust
from glrstar.table import build_table
from glrstar.trees import count_trees

from oracles import random_grammars


def _alt(rule_id, skips, children=()):
    a = PackedAlternative(rule_id, children)
    a.skipped_count = skips
    a.skipped_positions = frozenset(range(skips))
    return a


def _node(*alts):
    n = SymbolNode(1, "NP", 0, 0, 3, False)
    for a in alts:
        n.alternatives.append(a)
        n._keys.add(a.key)
    return n


def test_pack_discards_more_skips():
    n = _node(_alt(1, 0))
    assert pack(n, _alt(2, 1)) is PackOutcome.DISCARDED_NEW
    assert [a.rule_id for a in n.alternatives] == [1]


def test_pack_replaces_worse():
    n = _node(_alt(1, 2))
    assert pack(n, _alt(2, 0)) is PackOutcome.REPLACED_EXISTING
    assert [a.rule_id for a in n.alternatives] == [2]


def test_pack_merges_equal():
    n = _node(_alt(1, 1))
    assert pack(n, _alt(2, 1)) is PackOutcome.MERGED
    assert len(n.alternatives) == 2


def test_push_shift_creates_terminal(g1):
    gss = Gss(g1.t, 5)
    target, _ = g1.t.shift(0, "det")
    node = gss.push_shift(gss.root, 0, Reading("det", "the"), target)
    assert node.frontier == 1 and node.state == target
    (lk,) = node.links.values()
    assert lk.label.symbol == "det" and lk.label.span == (0, 1)
    assert lk.label.terminal and len(lk.label.alternatives) == 1


def test_push_shift_shares_state_nodes(g1):
    gss = Gss(g1.t, 2)
    target, _ = g1.t.shift(0, "n")
    a = gss.push_shift(gss.root, 0, Reading("n", "dog"), target)
    b = gss.push_shift(gss.root, 0, Reading("n", "dog"), target)
    assert a is b and len(gss.frontiers[1]) == 1


def test_push_shift_substitution(g1_subs):
    t = g1_subs.t
    gss = Gss(t, 1)
    target, _ = t.shift(0, "n")
    node = gss.push_shift(gss.root, 0, Reading("n", "two", substituted=True), target)
    (lk,) = node.links.values()
    assert lk.label.sub_count == 1


def test_reduce_np(g1):
    t = g1.t
    gss = Gss(t, 2)
    s1, _ = t.shift(0, "det")
    n1 = gss.push_shift(gss.root, 0, Reading("det", "the"), s1)
    s2, _ = t.shift(s1, "n")
    n2 = gss.push_shift(n1, 1, Reading("n", "dog"), s2)
    np_rule = next(r.rule_id for r in g1.g.rules if r.rhs == ("det", "n"))
    (out,) = gss.reduce(n2, np_rule)
    (lk,) = out.links.values()
    assert lk.label.symbol == "NP" and lk.label.span == (0, 2)
    assert lk.pred is gss.root


def test_epsilon_span():
    g = augment(load_grammar("%start S\nS -> a X ;\nX -> ;\na : a\n"))
    t = build_table(g)
    gss = Gss(t, 1)
    s1, _ = t.shift(0, "a")
    n1 = gss.push_shift(gss.root, 0, Reading("a", "a"), s1)
    eps = next(r.rule_id for r in g.rules if r.lhs == "X")
    (out,) = gss.reduce(n1, eps)
    (lk,) = out.links.values()
    assert lk.label.span == (1, 1) and lk.pred is n1


def test_ambiguity_keeps_both_trees(g2):
    out = parse_robust(g2.g, g2.t, g2.tokens("a plus a plus a"))
    (root,) = [r for r in out.accept_roots if r.skipped_count == 0]
    assert count_trees(root.node) == 2


def test_packing_prunes_more_skips_in_parse():
    g = augment(load_grammar("%start S\nS -> NP v ;\nNP -> det n ;\nNP -> n ;\nthe : det\ndog : n\nsaw : v\n"))
    t = build_table(g)
    out = parse_robust(g, t, tokenize(g, "the dog saw".split()), BeamConfig(enabled=False))
    nps = [s for s in out.gss.symbols.values() if s.symbol == "NP" and s.span == (0, 2)]
    assert nps
    for np in nps:
        assert [g.rules[a.rule_id].rhs for a in np.alternatives] == [("det", "n")]
        assert np.skips == 0


def _check_forest(out):
    for sym in out.gss.symbols.values():
        assert sym.skipped <= set(range(sym.start, sym.end))
        if sym.terminal:
            assert len(sym.alternatives) == 1
            continue
        assert sym.alternatives
        assert {a.skipped_count for a in sym.alternatives} == {sym.skips}
        for a in sym.alternatives:
            pos = sym.start
            for c in a.children:
                assert c.start == pos
                pos = c.end
            assert pos == sym.end
    seen = [(n.state, n.frontier) for n in out.gss.nodes.values()]
    assert len(seen) == len(set(seen))


def test_forest_invariants_on_random_grammars():
    rng = random.Random(3)
    for _, g in random_grammars(41, 25):
        a = augment(g)
        t = build_table(a)
        words = sorted(g.terminals) + ["zz"]
        for _ in range(5):
            ws = [rng.choice(words) for _ in range(rng.randint(1, 6))]
            _check_forest(parse_robust(a, t, tokenize(a, ws), BeamConfig(enabled=False)))


def test_dot_export(g1):
    out = parse_robust(g1.g, g1.t, g1.tokens("the dog saw the cat"))
    dot = out.gss.to_dot()
    assert dot.startswith("digraph gss {") and "NP [0,2) skips=0" in dot
