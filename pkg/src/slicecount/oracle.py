"""Exponential-time exact oracles and the statistical harness."""

from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .engine import counter, node_rng
from .grammar import Grammar, cyk_accepts, to_cnf
from .nnf import NnfCircuit
from .params import PRACTICAL
from .program import Input, Monomial, Program, Times, capped_support, mask_mono, mono_mask
from . import sampling as smp

SUPPORT_CAP = 2_000_000
ASSIGNMENT_CAP = 1 << 20
WORD_CAP = 2_000_000


class OracleRefusal(RuntimeError):
    """The instance is too large for exhaustive enumeration."""


def enumerate_support(p: Program, hard_cap: int = SUPPORT_CAP, q: int | None = None) -> set[Monomial]:
    """supp(q) by an uncapped bottom-up pass; refuses once any node exceeds ``hard_cap``."""
    return {mask_mono(m) for m in support_masks(p, hard_cap, q)}


def support_masks(p: Program, hard_cap: int = SUPPORT_CAP, q: int | None = None) -> frozenset[int]:
    q = p.root if q is None else q
    sets: dict[int, frozenset[int]] = {}
    for u in p.reachable(q):
        node = p.nodes[u]
        if isinstance(node, Input):
            s = frozenset((1 << node.var,))
        elif isinstance(node, Times):
            a, b = sets[node.left], sets[node.right]
            if len(a) * len(b) > hard_cap:
                raise OracleRefusal(f"support of node {u} exceeds {hard_cap} monomials")
            s = frozenset(x | y for x in a for y in b)
        else:
            s = frozenset().union(*(sets[c] for c in node.children))
            if len(s) > hard_cap:
                raise OracleRefusal(f"support of node {u} exceeds {hard_cap} monomials")
        sets[u] = s
    return sets[q]


def support_by_membership(p: Program, q: int | None = None, hard_cap: int = SUPPORT_CAP) -> set[Monomial]:
    """Second route: test every deg(q)-subset of var(q) for membership."""
    q = p.root if q is None else q
    vs = p.varset(q)
    d = p.degrees[q]
    if math.comb(len(vs), d) > hard_cap:
        raise OracleRefusal(f"{math.comb(len(vs), d)} candidate monomials exceed {hard_cap}")
    return {c for c in itertools.combinations(vs, d) if p.contains(q, c)}


def brute_cfg_count(g: Grammar, n: int, hard_cap: int = WORD_CAP) -> int:
    """|L_n(G)| by CYK over every word of length n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    cnf = to_cnf(g)
    if n == 0:
        return int(cnf.derives_empty)
    if len(cnf.grammar.alphabet) ** n > hard_cap:
        raise OracleRefusal(f"{len(cnf.grammar.alphabet)}^{n} words exceed {hard_cap}")
    if not cnf.grammar.rules:
        return 0
    return sum(cyk_accepts(cnf.grammar, w) for w in itertools.product(cnf.grammar.alphabet, repeat=n))


def brute_cfg_words(g: Grammar, n: int, hard_cap: int = WORD_CAP) -> set[tuple[str, ...]]:
    cnf = to_cnf(g)
    if len(cnf.grammar.alphabet) ** n > hard_cap:
        raise OracleRefusal(f"{len(cnf.grammar.alphabet)}^{n} words exceed {hard_cap}")
    if not cnf.grammar.rules:
        return set()
    return {w for w in itertools.product(cnf.grammar.alphabet, repeat=n) if cyk_accepts(cnf.grammar, w)}


def brute_dnnf_models(c: NnfCircuit, hard_cap: int = ASSIGNMENT_CAP) -> list[tuple[bool, ...]]:
    if 2**c.num_vars > hard_cap:
        raise OracleRefusal(f"2^{c.num_vars} assignments exceed {hard_cap}")
    return [a for a in itertools.product((False, True), repeat=c.num_vars) if c.evaluate(a)]


def brute_dnnf_count(c: NnfCircuit, hard_cap: int = ASSIGNMENT_CAP) -> int:
    return len(brute_dnnf_models(c, hard_cap))


def exact_uniform_sample(p: Program, rng: random.Random, hard_cap: int = SUPPORT_CAP) -> Monomial:
    supp = sorted(support_masks(p, hard_cap))
    if not supp:
        raise ValueError("empty support")
    return mask_mono(supp[rng.randrange(len(supp))])


# -- statistical harness -----------------------------------------------------------


def wilson_lower(hits: int, trials: int, z: float = 1.959963984540054) -> float:
    if trials <= 0:
        raise ValueError("trials must be positive")
    ph = hits / trials
    den = 1 + z * z / trials
    centre = ph + z * z / (2 * trials)
    rad = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials))
    return max(0.0, (centre - rad) / den)


@dataclass
class TrialReport:
    trials: int
    hits: int
    empirical_coverage: float
    wilson_lower_bound: float
    abort_rate: float
    seed_base: int
    exact: int
    epsilon: float
    delta: float
    invariant_violations: int
    exact_path: bool
    estimates: list[float]

    def to_json(self, with_estimates: bool = False) -> dict:
        d = asdict(self)
        if not with_estimates:
            d.pop("estimates")
        return d


def _trial(args) -> tuple[float, int, int, bool, int]:
    p, epsilon, delta, mode, overrides, seed = args
    res = counter(p, epsilon, delta, mode, overrides, seed)
    aborted = sum(r.aborted for r in res.runs)
    return res.estimate, aborted, len(res.violations), res.exact_path, len(res.runs)


def run_coverage_trials(
    p: Program,
    epsilon: float,
    delta: float,
    mode: str = PRACTICAL,
    overrides: dict | None = None,
    trials: int = 200,
    seed_base: int = 0,
    exact: int | None = None,
    jobs: int = 1,
) -> TrialReport:
    """Run ``counter`` with seeds seed_base + i and compare with the exact count."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    exact = len(support_masks(p)) if exact is None else exact
    tasks = [(p, epsilon, delta, mode, overrides, seed_base + i) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(_trial, tasks))
    else:
        outs = [_trial(t) for t in tasks]
    lo, hi = (1 - epsilon) * exact, (1 + epsilon) * exact
    hits = sum(lo <= est <= hi for est, *_ in outs)
    aborted = sum(o[1] for o in outs)
    runs = sum(o[4] for o in outs)
    return TrialReport(
        trials=trials,
        hits=hits,
        empirical_coverage=hits / trials,
        wilson_lower_bound=wilson_lower(hits, trials),
        abort_rate=aborted / runs if runs else 0.0,
        seed_base=seed_base,
        exact=exact,
        epsilon=epsilon,
        delta=delta,
        invariant_violations=sum(o[2] for o in outs),
        exact_path=all(o[3] for o in outs),
        estimates=[o[0] for o in outs],
    )


def inclusion_frequency_probe(
    p: Program,
    q: int,
    alpha: Monomial,
    support_threshold: int,
    trials: int,
    seed_base: int = 0,
    beta: Monomial | None = None,
) -> float:
    """Frequency of alpha in S^1(q) (and of beta too, if given) over independent runs.

    q must have effective height 0 under ``support_threshold``; each trial
    draws S^1(q) exactly as a run with seed ``seed_base + i`` does (the first
    set only consumes a prefix of the node's stream).
    """
    info = capped_support(p, support_threshold)
    if not info.is_exact(q):
        raise ValueError(f"node {q} has positive effective height")
    a = mono_mask(alpha)
    if not p.contains_mask(q, a):
        raise ValueError(f"{alpha} is not in the support of node {q}")
    b = None if beta is None else mono_mask(beta)
    if b is not None and not p.contains_mask(q, b):
        raise ValueError(f"{beta} is not in the support of node {q}")
    supp = info.exact[q]
    n = p.degree
    t = min(1.0, 16 * n / len(supp))
    width = smp.words_for(p.num_vars)
    arr = smp.masks_to_array(supp, width)
    hits = 0
    for i in range(trials):
        rng = node_rng(seed_base + i, 0, q)
        s = smp.repeated_support(arr, 1, t, rng, theta=1 << 62, cap=1 << 40)
        got = set(s.set_masks(0))
        if a in got and (b is None or b in got):
            hits += 1
    return hits / trials
