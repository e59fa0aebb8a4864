import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicecount.generators import random_dnnf
from slicecount.nnf import (
    And,
    Const,
    Lit,
    NnfCircuit,
    NnfError,
    Or,
    check_decomposable,
    check_smooth,
    dnnf_to_plus_times,
    eliminate_constants,
    parse_nnf,
    prepare_dnnf,
    smooth,
)
from slicecount.oracle import brute_dnnf_count, brute_dnnf_models, enumerate_support
from slicecount.program import validate_program


def test_parse_literal():
    c = parse_nnf("nnf 1 0 1\nL 1\n")
    assert c.nodes == (Lit(1, True),)


def test_parse_or():
    c = parse_nnf("c comment\nnnf 3 2 1\nL 1\nL -1\nO 0 2 0 1\n")
    assert c.nodes[-1] == Or((0, 1))
    assert brute_dnnf_count(c) == 2


def test_parse_rejects_forward_reference():
    with pytest.raises(NnfError):
        parse_nnf("nnf 2 1 1\nA 1 1\nL 1\n")


def test_parse_constants():
    c = parse_nnf("nnf 1 0 2\nA 0\n")
    assert c.nodes == (Const(True),)
    assert brute_dnnf_count(c) == 4


def test_decomposability():
    ok = NnfCircuit(2, (Lit(1, True), Lit(2, True), And((0, 1))))
    assert check_decomposable(ok) == []
    bad = NnfCircuit(2, (Lit(1, True), Lit(2, True), Or((0, 1)), And((0, 2))))
    assert [v.node for v in check_decomposable(bad)] == [3]


def test_smoothness():
    c = NnfCircuit(2, (Lit(1, True), Lit(2, True), Or((0, 1))))
    assert [v.node for v in check_smooth(c)] == [2]
    assert check_smooth(NnfCircuit(1, (Lit(1, True), Lit(1, False), Or((0, 1))))) == []


def test_smooth_or_of_two_variables():
    c = NnfCircuit(2, (Lit(1, True), Lit(2, True), Or((0, 1))))
    s = smooth(c)
    assert check_smooth(s) == [] and check_decomposable(s) == []
    assert brute_dnnf_count(s) == brute_dnnf_count(c) == 3


def test_smooth_keeps_smooth_circuits():
    c = NnfCircuit(1, (Lit(1, True), Lit(1, False), Or((0, 1))))
    assert smooth(c) == c


def test_literal_program():
    p, dec = dnnf_to_plus_times(parse_nnf("nnf 1 0 1\nL 1\n"))
    assert p.size == 1 and p.var_names[p.nodes[0].var] == "+1"
    assert enumerate_support(p) == {dec.encode((True,))}


def test_tautology_program():
    p, _ = dnnf_to_plus_times(NnfCircuit(1, (Lit(1, True), Lit(1, False), Or((0, 1)))))
    assert len(enumerate_support(p)) == 2


def test_constant_elimination():
    c = NnfCircuit(1, (Lit(1, True), Const(False), And((0, 1))))
    assert eliminate_constants(c) is False
    assert prepare_dnnf(c).constant is False
    t = NnfCircuit(1, (Lit(1, True), Const(True), And((0, 1))))
    assert brute_dnnf_count(t) == 1
    prep = prepare_dnnf(t)
    assert len(enumerate_support(prep.program)) == 1


def test_rejects_non_decomposable():
    bad = NnfCircuit(2, (Lit(1, True), Lit(2, True), Or((0, 1)), And((0, 2))))
    with pytest.raises(NnfError):
        prepare_dnnf(bad)


def test_eight_variable_circuit():
    c = random_dnnf(random.Random(8), 8)
    p, dec = dnnf_to_plus_times(smooth(c))
    assert len(enumerate_support(p)) == brute_dnnf_count(c)


@given(st.integers(0, 100_000), st.integers(1, 8), st.booleans(), st.booleans())
def test_translation_preserves_models(seed, nv, smooth_in, consts):
    c = random_dnnf(random.Random(seed), nv, smooth=smooth_in, constants=consts)
    assert check_decomposable(c) == []
    models = set(brute_dnnf_models(c))
    prep = prepare_dnnf(c)
    if prep.program is None:
        assert len(models) == (2**nv if prep.constant else 0)
        return
    assert validate_program(prep.program) == []
    decoded = {prep.decoder.decode(m) for m in enumerate_support(prep.program)}
    assert decoded == models


@given(st.integers(0, 100_000), st.integers(1, 6))
def test_smoothing_preserves_models(seed, nv):
    c = random_dnnf(random.Random(seed), nv, smooth=False)
    s = smooth(c)
    assert check_smooth(s) == [] and check_decomposable(s) == []
    assert brute_dnnf_models(s) == brute_dnnf_models(c)


def test_text_round_trip():
    c = random_dnnf(random.Random(3), 5, smooth=False, constants=True)
    assert parse_nnf(c.to_text()) == c
