import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicecount.generators import random_program, sum_of_products
from slicecount.oracle import support_masks
from slicecount.program import Plus, Times, capped_support, mask_mono
from slicecount.trees import (
    antichain_audit,
    derivation_tree,
    derivation_tree_star,
    is_antichain,
    last_common_subtree_nodeset,
    mutation_class,
    mutations_below,
)

from conftest import x


def test_red_tree_routes_through_q1(fig1):
    p, ix = fig1
    t = derivation_tree(p, ix["q0"], x(3, 5, 8, 9))
    assert t.children[ix["q0"]] == (ix["q1"],)
    assert {ix["q3"], ix["q6"], ix["q5"], ix["q10"]} <= t.nodes
    assert sorted(p.nodes[u].var for u in t.leaves()) == list(x(3, 5, 8, 9))


def test_tree_of_input_is_leaf(fig1):
    p, ix = fig1
    t = derivation_tree(p, ix["q13"], x(3))
    assert t.leaves() == [ix["q13"]]
    assert len(t) == 1


def test_tree_rejects_non_member(fig1):
    p, ix = fig1
    with pytest.raises(ValueError):
        derivation_tree(p, ix["q0"], x(1, 2, 3, 4))


def test_lcsn_worked_example(fig1):
    p, ix = fig1
    t1 = derivation_tree(p, ix["q0"], x(3, 5, 8, 9))
    t2 = derivation_tree(p, ix["q0"], x(1, 3, 8, 9))
    assert last_common_subtree_nodeset(t1, t2) == {ix["q6"], ix["q13"]}
    assert last_common_subtree_nodeset(t2, t1) == {ix["q6"], ix["q13"]}


def test_lcsn_identical_trees_is_root(fig1):
    p, ix = fig1
    t = derivation_tree(p, ix["q0"], x(1, 3, 8, 9))
    assert last_common_subtree_nodeset(t, t) == {ix["q0"]}


def test_lcsn_pairs_are_antichains_with_equal_subtrees(fig1):
    p, ix = fig1
    supp = [mask_mono(m) for m in sorted(support_masks(p))]
    for a in supp:
        ta = derivation_tree(p, ix["q0"], a)
        for b in supp:
            tb = derivation_tree(p, ix["q0"], b)
            tau = last_common_subtree_nodeset(ta, tb)
            assert is_antichain(ta, tau) and is_antichain(tb, tau)
            for u in tau:
                assert ta.subtree(u) == tb.subtree(u)


def test_mutations_below_worked_example(fig1):
    p, ix = fig1
    got = mutations_below(p, ix["q0"], x(1, 3, 8, 9), {ix["q6"], ix["q13"]})
    assert got == {x(1, 3, 8, 9), x(1, 3, 6, 7)}


def test_mutation_class_of_root_is_self(fig1):
    p, ix = fig1
    info = capped_support(p, 10**6)
    assert mutation_class(p, ix["q0"], x(1, 3, 8, 9), {ix["q0"]}, info) == {x(1, 3, 8, 9)}


def test_antichain_bound_on_fig1(fig1):
    p, ix = fig1
    info = capped_support(p, 10**6)
    assert antichain_audit(p, ix["q0"], info) == []


def test_tree_star_stops_at_height_zero(fig1):
    p, ix = fig1
    info = capped_support(p, 10**6)
    t = derivation_tree_star(p, ix["q0"], x(3, 5, 8, 9), info)
    assert len(t) == 1 and t.leaves() == [ix["q0"]]


def test_tree_star_with_cap_one(fig1):
    p, ix = fig1
    info = capped_support(p, 1)
    # q9 = x6*x7 and q10 = x8*x9 have a single monomial, so they are small too
    small = set(range(9)) | {ix["q9"], ix["q10"]}
    assert {u for u in range(p.size) if info.effective_height[u] == 0} == small
    for m in support_masks(p):
        a = mask_mono(m)
        full = derivation_tree(p, ix["q0"], a)
        star = derivation_tree_star(p, ix["q0"], a, info)
        expect = {u for u in full.nodes if not any(full.is_ancestor(s, u) for s in (ix["q9"], ix["q10"]))}
        assert star.nodes == expect


def programs():
    def build(seed):
        rng = random.Random(seed)
        if rng.random() < 0.5:
            return sum_of_products(rng, rng.randint(1, 4), rng.randint(1, 3), (1, 3))
        try:
            return random_program(rng, rng.randint(2, 4), num_vars=7)
        except ValueError:
            return sum_of_products(rng, 2, 2)

    return st.builds(build, st.integers(0, 100_000))


@given(programs())
def test_tree_shape_and_size(p):
    n = p.degree
    for m in support_masks(p):
        t = derivation_tree(p, p.root, mask_mono(m))
        assert len(t) <= 4 * n
        for u, cs in t.children.items():
            node = p.nodes[u]
            if isinstance(node, Plus):
                assert len(cs) == 1
            elif isinstance(node, Times):
                assert len(cs) == 2
        leaf_vars = 0
        for u in t.leaves():
            leaf_vars |= 1 << p.nodes[u].var
        assert leaf_vars == m


@given(programs(), st.integers(1, 40))
def test_tree_star_is_subtree(p, cap):
    info = capped_support(p, cap)
    for m in support_masks(p):
        a = mask_mono(m)
        assert derivation_tree_star(p, p.root, a, info).nodes <= derivation_tree(p, p.root, a).nodes


@given(programs())
def test_antichain_audit_random(p):
    if len(support_masks(p)) > 200:
        return
    info = capped_support(p, 10**6)
    assert antichain_audit(p, p.root, info) == []


@given(programs())
def test_mutation_classes_partition_support(p):
    supp = support_masks(p)
    if len(supp) > 60:
        return
    info = capped_support(p, 10**6)
    a = mask_mono(min(supp))
    ta = derivation_tree(p, p.root, a)
    taus = {last_common_subtree_nodeset(ta, derivation_tree(p, p.root, mask_mono(b))) for b in supp}
    seen = set()
    for tau in taus:
        cls = mutation_class(p, p.root, a, tau, info)
        assert not (cls & seen)
        seen |= cls
    assert seen == {mask_mono(m) for m in supp}


@given(programs())
def test_mutations_below_stay_in_support(p):
    supp = support_masks(p)
    a = mask_mono(min(supp))
    t = derivation_tree(p, p.root, a)
    for u in t.nodes:
        got = mutations_below(p, p.root, a, {u})
        assert a in got
        assert all(p.contains(p.root, b) for b in got)
        assert len(got) == len(support_masks(p, q=u))
