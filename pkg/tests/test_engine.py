import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicecount.engine import ResourceError, count_core, counter, lower_median, node_rng
from slicecount.generators import sum_of_products
from slicecount.oracle import support_masks
from slicecount.params import PRACTICAL, STRICT, derive_params
from slicecount.program import parse_program

FAST = {"support_threshold": 4, "n_s": 20, "n_t": 3, "m": 3, "theta": 10**6}


@pytest.fixture(scope="module")
def medium():
    p = sum_of_products(random.Random(3), 4, 2, (2, 4), 20)
    return p, len(support_masks(p))


def test_fig1_exact_path(fig1):
    p, _ = fig1
    res = counter(p, 0.5, 0.25)
    assert res.exact_path and res.estimate == 8.0
    assert len(res.runs) == 1


def test_count_core_exact_matches_counter(fig1):
    p, _ = fig1
    params = derive_params(p, 0.5, 0.25)
    assert count_core(p, params, seed=0).estimate == counter(p, 0.5, 0.25, overrides={"m": 1}).estimate


def test_single_input():
    res = counter(parse_program("input x\n"), 0.5, 0.25)
    assert res.estimate == 1.0 and res.exact_path


def test_theta_one_aborts(medium):
    p, _ = medium
    params = derive_params(p, 0.5, 0.25, overrides={**FAST, "theta": 1})
    r = count_core(p, params, seed=0)
    assert r.aborted and r.estimate == 0.0 and r.abort_reason == "theta"


def test_lower_median():
    assert lower_median([3, 1, 2]) == 2
    assert lower_median([4, 1, 3, 2]) == 2
    assert lower_median([0.0]) == 0.0


def test_node_streams_are_independent():
    a = node_rng(1, 0, 5).integers(0, 2**63, 4).tolist()
    assert a == node_rng(1, 0, 5).integers(0, 2**63, 4).tolist()
    assert a != node_rng(1, 0, 6).integers(0, 2**63, 4).tolist()
    assert a != node_rng(1, 1, 5).integers(0, 2**63, 4).tolist()
    assert a != node_rng(2, 0, 5).integers(0, 2**63, 4).tolist()


def test_seeded_replay_and_jobs(medium):
    p, _ = medium
    a = counter(p, 0.5, 0.25, PRACTICAL, FAST, seed=4)
    b = counter(p, 0.5, 0.25, PRACTICAL, FAST, seed=4, jobs=2)
    assert a.to_json() == b.to_json()
    c = counter(p, 0.5, 0.25, PRACTICAL, FAST, seed=5)
    assert [r.estimate for r in c.runs] != [r.estimate for r in a.runs]


def test_randomized_estimate_is_close(medium):
    p, exact = medium
    res = counter(p, 0.5, 0.25, PRACTICAL, {**FAST, "n_s": 200, "n_t": 9, "m": 9}, seed=1)
    assert not res.exact_path
    assert 0.5 * exact <= res.estimate <= 1.5 * exact
    assert res.violations == []


def test_diagnostics_report_nodes(medium):
    p, _ = medium
    res = counter(p, 0.5, 0.25, PRACTICAL, FAST, seed=0, diagnostics=True)
    nodes = res.to_json(diagnostics=True)["runs"][0]["nodes"]
    assert nodes[-1]["node"] == res.runs[0].nodes[-1]["node"]
    assert all(0 < n["p"] <= 1 for n in nodes)
    assert "nodes" not in res.to_json()["runs"][0]


def test_strict_mode_refuses_huge_sample_counts():
    p = sum_of_products(random.Random(0), 10, 1, (4, 4), 40)
    params = derive_params(p, 0.5, 0.25, STRICT)
    assert params.support_threshold < 4**10
    with pytest.raises(ResourceError):
        counter(p, 0.5, 0.25, STRICT)


def test_strict_mode_exact_path_is_fine(fig1):
    res = counter(fig1[0], 0.5, 0.25, STRICT)
    assert res.estimate == 8.0 and res.params.mode == STRICT


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(1, 3), st.integers(0, 10**6))
def test_run_invariants(pseed, degree, blocks, seed):
    p = sum_of_products(random.Random(pseed), degree, blocks, (2, 3), 12)
    res = counter(p, 0.5, 0.25, PRACTICAL, FAST, seed=seed, diagnostics=True)
    assert res.violations == []
    if res.exact_path:
        assert res.estimate == len(support_masks(p))
        return
    for r in res.runs:
        if r.aborted:
            continue
        for n in r.nodes:
            assert 0 < n["p"] <= 1
        # p(root) <= 1 means the estimate 16n / p(root) is at least 16n
        assert r.estimate >= 16 * p.degree
