import pytest

from glrstar.grammar import EOF, augment, load_grammar
from glrstar.table import (
    ACCEPT, REDUCE, SHIFT, CorruptTableError, GrammarMismatchError, TableError, build_table,
    deserialize_table, serialize_table, table_stats,
)
from glrstar.stats import train

from conftest import G1_TEXT, G2_TEXT


def test_g1_state_count_matches_hand_construction(g1):
    # Hand-run LR(0) collection for augmented G1: 12 item sets.
    stats = table_stats(g1.t)
    assert stats["state_count"] == 12
    assert stats["conflict_cell_count"] == 0


def test_targets_in_range(g1, g2):
    for b in (g1, g2):
        n = len(b.t.states)
        for cell in b.t.actions.values():
            for a in cell:
                if a.kind == SHIFT:
                    assert 0 <= a.target < n
                if a.kind == REDUCE:
                    assert 0 <= a.rule_id < len(b.g.rules)
        assert all(0 <= tgt < n for tgt in b.t.gotos.values())


def test_g2_has_shift_reduce_conflict(g2):
    assert table_stats(g2.t)["conflict_cell_count"] >= 1
    mixed = [cell for cell in g2.t.actions.values() if {a.kind for a in cell} >= {SHIFT, REDUCE}]
    assert mixed


def test_single_rule_grammar():
    g = augment(load_grammar("%start S\nS -> a ;\na : a\n"))
    t = build_table(g)
    assert table_stats(t)["conflict_cell_count"] == 0
    # S' -> .FRAGS; FRAGS -> FRAGS.FRAG; FRAGS -> FRAG.; FRAG -> S.; S -> a.
    # plus FRAGS -> FRAGS FRAG. = 6 states
    assert len(t.states) == 6


def test_accept_only_on_eof(g1):
    for (state, col), cell in g1.t.actions.items():
        for a in cell:
            if a.kind == ACCEPT:
                assert col == EOF


def test_conflict_free_cells_are_single(g1):
    assert all(len(cell) == 1 for cell in g1.t.actions.values())


def test_closure_soundness(g1):
    g = g1.g
    for st in g1.t.states:
        for it in st.items:
            rhs = g.rules[it.rule_id].rhs
            if it.dot < len(rhs) and rhs[it.dot] in g.nonterminals:
                for r in g.rules_for(rhs[it.dot]):
                    assert any(x.rule_id == r.rule_id and x.dot == 0 for x in st.items)


def test_reduce_in_every_column(g1):
    for st in g1.t.states:
        done = [it for it in st.items if it.dot == len(g1.g.rules[it.rule_id].rhs)
                and g1.g.rules[it.rule_id].lhs != g1.g.start]
        for it in done:
            for col in list(g1.g.terminals) + [EOF]:
                cell = g1.t.actions.get((st.state_id, col), [])
                assert any(a.kind == REDUCE and a.rule_id == it.rule_id for a in cell)


def test_build_requires_augmented():
    with pytest.raises(TableError):
        build_table(load_grammar(G1_TEXT))


def test_round_trip(g1):
    assert deserialize_table(serialize_table(g1.t)) == g1.t
    assert deserialize_table(serialize_table(g1.t), g1.raw).grammar_hash == g1.t.grammar_hash


def test_round_trip_probabilities_bit_exact(g2):
    from glrstar.stats import derive_action_sequence
    from glrstar.trees import parse_sexprs

    (tree,) = parse_sexprs("(E (E (a a)) (plus plus) (E (a a)))")
    trained = train(g2.t, [derive_action_sequence(g2.g, g2.t, "a plus a".split(), tree)])
    back = deserialize_table(serialize_table(trained))
    assert back == trained
    for key, cell in trained.actions.items():
        for a, b in zip(cell, back.actions[key]):
            assert a.log_prob == b.log_prob


def test_truncated_payload(g1):
    data = serialize_table(g1.t)
    with pytest.raises(CorruptTableError):
        deserialize_table(data[:-1])
    with pytest.raises(CorruptTableError):
        deserialize_table(data[:10])
    with pytest.raises(CorruptTableError):
        deserialize_table(b"XXXX" + data[4:])


def test_corrupt_body(g1):
    data = bytearray(serialize_table(g1.t))
    data[-3] ^= 0xFF
    with pytest.raises(CorruptTableError):
        deserialize_table(bytes(data))


def test_hash_mismatch(g1):
    with pytest.raises(GrammarMismatchError):
        deserialize_table(serialize_table(g1.t), load_grammar(G2_TEXT))
