import json
from fractions import Fraction

import pytest

from rspin.correlators import (CorrelatorTable, Evaluator, InconsistentSystem, NeedsBase, TableConflict,
                               dilaton_expansion, fit_extended_primaries, legal_expansions,
                               load_base_table, string_expansion, trr_g1_expansion)
from rspin.keys import InvalidKey, dimension_gate, ext_key, open_key, open_keys

from conftest import pipelines, potentials


def test_gate_examples():
    assert dimension_gate(open_key(1, [(1, 1)], 1), 3)
    assert not dimension_gate(open_key(1, [(0, 1)], 2), 2)
    for r in (2, 3, 5):
        for a in range(r - 1):
            for b in range(r - 1 - a):
                assert dimension_gate(ext_key([(a, 0), (b, 0), (r - 2 - a - b, 0)]), r)


def test_printed_dilaton_insertion_never_passes_the_gate():
    # adding tau^1_0 moves the rank side by 2/r and the dimension side by 2
    for r in (2, 3, 4):
        for key in open_keys(r, 9, 0):
            assert not dimension_gate(key.replace(ins=key.ins + ((1, 0),)), r)


def test_key_validation():
    with pytest.raises(InvalidKey):
        dimension_gate(open_key(0, [(3, 0)], 1), 3)
    with pytest.raises(InvalidKey):
        dimension_gate(ext_key([(-1, 0), (-1, 0), (2, 0)]), 3)
    assert open_key(0, [(1, 0), (0, 2)], 1) == open_key(0, [(0, 2), (1, 0)], 1)


def test_string_and_dilaton_expansions():
    key = open_key(0, [(0, 0), (1, 2)], 2)
    assert string_expansion(key, 3) == [] or string_expansion(key, 3)[0][1] == (open_key(0, [(1, 1)], 2),)
    k2 = open_key(0, [(0, 0), (0, 1)], 1)
    assert string_expansion(k2, 2) == [(1, (open_key(0, [(0, 0)], 1),))]
    k3 = open_key(0, [(0, 1)], 3)
    assert dilaton_expansion(k3, 2) == [(2, (open_key(0, [], 3),))]
    assert string_expansion(open_key(0, [(0, 0)], 1), 2) is None


def test_degenerate_genus_one_trr():
    # every genus-one factor has no descendents left, so only the half term survives
    key = open_key(1, [(1, 1)], 1)
    terms = trr_g1_expansion(key, 3, 0)
    live = [(c, f) for c, f in terms if not any(x.g == 1 and x.sum_d == 0 for x in f)]
    assert live == [(Fraction(1, 2), (open_key(0, [(1, 0)], 2),))]


def test_three_point_extended_primaries():
    for r in (2, 3):
        fit = pipelines(r, 10 if r == 2 else 9)["fit"]
        assert fit.undetermined == []
        assert all(x == 0 for x in fit.residuals)
        for key, v in fit.table.items():
            if key.l == 3 and all(a >= 0 for a, _ in key.ins):
                assert v == 1


def test_classical_r3_four_point():
    fit = pipelines(3, 9)["fit"]
    assert fit.table.get(ext_key([(1, 0)] * 4)) == Fraction(1, 3)


def test_fit_rejects_inconsistent_data():
    r, W = 2, 13
    data = dict(potentials(r, W).candidates(0))
    key = open_key(0, [(0, 1), (1, 0), (1, 0)], 1)
    assert data[key]
    data[key] += 1
    with pytest.raises(InconsistentSystem):
        fit_extended_primaries(data, r, W)


def test_needs_base():
    ev = Evaluator(2, CorrelatorTable())
    with pytest.raises(NeedsBase) as err:
        ev(open_key(0, [], 3))
    assert err.value.key == open_key(0, [], 3)


def test_gate_failing_key_is_zero():
    ev = Evaluator(2, CorrelatorTable())
    assert ev(open_key(0, [(0, 1)], 1)) == 0
    assert ev(open_key(1, [(0, 1)], 2)) == 0


@pytest.mark.parametrize("r,W", [(2, 10), (3, 9)])
def test_pipeline_b_reproduces_pipeline_a(r, W):
    st = pipelines(r, W)
    first = Evaluator(r, st["base"], "first")
    last = Evaluator(r, st["base"], "last")
    for key, v in {**st["A0"], **st["A1"]}.items():
        assert first(key) == v
        assert last(key) == v


def test_cylinder_value_from_recursion():
    st = pipelines(3, 9)
    assert Evaluator(3, st["base"])(open_key(1, [(1, 1)], 1)) == Fraction(1, 2)


def test_all_expansions_agree_on_pipeline_a_values():
    r, W = 2, 10
    st = pipelines(r, W)
    pots, ext = st["pots"], Evaluator(r, st["base"])

    def value(k):
        return pots.correlator(k) if k.sector == "open" else ext(k)
    for key, v in {**st["A0"], **st["A1"]}.items():
        for rule, choice, terms in legal_expansions(key, r):
            total = sum((c * value(f[0]) * (value(f[1]) if len(f) > 1 else 1) for c, f in terms), Fraction(0))
            assert total == v, (rule, choice, key)


def test_table_conflicts():
    t = CorrelatorTable()
    k = open_key(0, [], 3)
    t.add(k, -2, "base")
    t.add(k, Fraction(-2), "pipeline-A")
    assert len(t) == 1 and t.provenance[k] == "base"
    with pytest.raises(TableConflict):
        t.add(k, 1, "base")


def test_load_base_table(tmp_path):
    p = tmp_path / "base.jsonl"
    p.write_text("")
    assert len(load_base_table(p, 2)) == 0
    row = {"sector": "ext", "g": 0, "ins": [[0, 0], [0, 0], [0, 0]], "k": 0, "value": "1"}
    p.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n")
    assert load_base_table(p, 2).get(ext_key([(0, 0)] * 3)) == 1
    bad = dict(row, ins=[[-1, 0], [-1, 0], [2, 0]])
    p.write_text(json.dumps(bad) + "\n")
    with pytest.raises(ValueError, match=":1:"):
        load_base_table(p, 4)
    p.write_text(json.dumps(row) + "\n" + json.dumps(dict(row, value="2")) + "\n")
    with pytest.raises(ValueError):
        load_base_table(p, 2)
    p.write_text("{not json\n")
    with pytest.raises(ValueError, match="parse"):
        load_base_table(p, 2)
    p.write_text(json.dumps(dict(row, ins=[[0, 1], [0, 0], [0, 0]])) + "\n")
    with pytest.raises(ValueError, match="vanish"):
        load_base_table(p, 2)
    p.write_text(json.dumps(dict(row, value="5/3")) + "\n")
    assert load_base_table(p, 2).dumps() == json.dumps(dict(row, value="5/3"), sort_keys=True) + "\n"
