from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicecount.params import params_for
from slicecount.pvalue import ONE, Arith, GridExhausted, PValue


@pytest.fixture
def arith():
    return Arith.from_params(params_for(4, 20, 0.5, 0.25, num_vars=16))


def test_acceptable_value_is_fixed(arith):
    v = arith.grid_value(1, 2, 100)
    assert arith.round_down(2, v) == v
    v = arith.grid_value(-1, 0, 65)
    assert arith.round_down(0, v) == v


def test_values_above_one_round_to_one(arith):
    assert arith.round_down(3, PValue(Fraction(5, 2))) is ONE
    assert arith.round_down(3, ONE) is ONE


def test_slightly_above_grid_point(arith):
    v = arith.grid_value(1, 1, 77)
    bumped = PValue(v.coef * Fraction(1_000_000_001, 1_000_000_000), v.j)
    assert arith.round_down(1, bumped) == v


def test_grid_exhausted():
    small = Arith.from_params(params_for(2, 5, 0.5, 0.25))
    with pytest.raises(GridExhausted):
        small.round_down(0, PValue(Fraction(1, 10**6)))
    with pytest.raises(GridExhausted):
        small.round_down(0, PValue(Fraction(0)))


def test_height_zero_values(arith):
    assert arith.height_zero(10).is_one
    assert arith.height_zero(128) == PValue(Fraction(1, 2))
    assert arith.estimate(arith.height_zero(256)) == 256.0


@given(st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(2)), st.integers(-20, 20), st.integers(0, 3))
def test_round_down_is_largest_below(v_coef, j, level):
    a = Arith.from_params(params_for(4, 20, 0.5, 0.25, num_vars=16))
    v = PValue(v_coef, j)
    r = a.round_down(level, v)
    assert a.cmp(r, v) <= 0
    assert a.is_acceptable(level, r)
    if not r.is_one:
        sign, lvl, ell = r.grid
        assert lvl == level
        # the next grid value up with the same sign is above v
        if ell > 1:
            up = a.grid_value(sign, level, ell - 1)
            assert a.cmp(up, v) > 0 or a.cmp(up, ONE) >= 0
        # the other sign does not give anything in between
        other = -sign
        for e in range(1, a.ell_max + 1):
            cand = a.grid_value(other, level, e)
            if a.cmp(cand, v) <= 0:
                assert a.cmp(cand, r) <= 0
                break


def test_mixed_exponent_compare(arith):
    x = PValue(Fraction(1, 2), 3)
    y = PValue(Fraction(1, 2), 2)
    assert arith.cmp(x, y) == 1
    assert arith.min(x, y, ONE) == y
