import math

import pytest

from slicecount.params import LN2_CLAMP, PRACTICAL, STRICT, ParamError, derive_params, params_for


def test_strict_constants_for_small_program():
    p = params_for(9, 20, 1.0, 0.25, STRICT)
    assert p.kappa == pytest.approx(1 / 4000, rel=1e-12)
    assert p.n_s == 192_000_000
    assert p.n_t == 1440
    assert p.support_threshold == 16 * 9 * 20 * 20
    assert p.m == math.ceil(16 * math.log(4))
    assert p.ell_max_log2 == 9


def test_epsilon_clamp_boundary():
    p = params_for(9, 20, LN2_CLAMP, 0.25, STRICT)
    assert p.epsilon_prime == LN2_CLAMP
    assert p.kappa_source == "ln2"
    q = params_for(9, 20, 10.0, 0.25, STRICT)
    assert q.kappa == p.kappa
    assert params_for(9, 20, 2.0, 0.25).kappa_source == "eps"


def test_practical_overrides_are_recorded():
    p = params_for(4, 10, 0.5, 0.25, PRACTICAL, {"n_s": 50, "n_t": 9, "theta": 10**5})
    assert (p.n_s, p.n_t, p.theta) == (50, 9, 10**5)
    assert "override n_s=50" in p.deviations
    assert "override theta=100000" in p.deviations


def test_strict_rejects_overrides():
    with pytest.raises(ParamError):
        params_for(4, 10, 0.5, 0.25, STRICT, {"n_s": 50})


@pytest.mark.parametrize(
    "kwargs",
    [
        {"epsilon": 0.0, "delta": 0.25},
        {"epsilon": 0.5, "delta": 1.0},
        {"epsilon": 0.5, "delta": 0.0},
        {"epsilon": float("inf"), "delta": 0.25},
    ],
)
def test_bad_epsilon_delta(kwargs):
    with pytest.raises(ParamError):
        params_for(4, 10, **kwargs)


def test_bad_overrides():
    with pytest.raises(ParamError):
        params_for(4, 10, 0.5, 0.25, overrides={"n_z": 3})
    with pytest.raises(ParamError):
        params_for(4, 10, 0.5, 0.25, overrides={"n_s": 0})


def test_json_round_trip(fig1):
    p = derive_params(fig1[0], 0.5, 0.1, overrides={"m": 3})
    assert type(p).from_json(p.to_json()) == p
    assert p.num_vars == 9 and p.size == 20 and p.n == 4


def test_ell_range_uses_variable_count():
    p = params_for(3, 10, 0.5, 0.25, num_vars=12)
    assert p.ell_max_log2 == 12
    assert any("ell" in d for d in p.deviations)
