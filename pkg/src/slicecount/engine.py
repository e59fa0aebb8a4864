"""Bottom-up randomized counting of supp(root) for (+,x) programs.

For every node q the run keeps p(q), an estimate of 16n/|supp(q)|, and R
sample sets S^r(q) in which every monomial of supp(q) appears with
probability p(q).  Nodes with few monomials are enumerated; times nodes
combine the sets of their children; plus nodes merge them without
duplicates and re-estimate p(q) with a median of means.
"""

from __future__ import annotations

import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import sampling as smp
from .depth import reduce_depth
from .params import PRACTICAL, STRICT, Params, derive_params
from .program import Plus, Program, SupportInfo, Times, capped_support
from .pvalue import ONE, Arith, GridExhausted, PValue

log = logging.getLogger(__name__)

MEMORY_GUARD_ELEMENTS = 30_000_000


class ResourceError(RuntimeError):
    """The requested parameters cannot be run in memory."""


# -- literal reference operations ------------------------------------------------


def reduce_set(z: Iterable[int], t: float, rng: random.Random | np.random.Generator) -> list[int]:
    """Keep each element independently with probability t, in sorted order.

    Elements are monomial masks; the result is sorted.
    """
    if not 0 <= t <= 1:
        raise ValueError(f"keep probability {t} outside [0, 1]")
    draw = rng.random
    return [x for x in sorted(z) if t >= 1 or draw() < t]


def union_filter(p: Program, q: int, sets: Sequence[Iterable[int]]) -> list[int]:
    """Union of the child sets of plus node q, dropping alpha from S_i when an
    earlier child of q contains it.  Sets must be ordered like the children."""
    node = p.nodes[q]
    if not isinstance(node, Plus) or len(sets) != len(node.children):
        raise ValueError("one set per child of a plus node is required")
    out: list[int] = []
    seen: set[int] = set()
    for i, s in enumerate(sets):
        for alpha in s:
            if alpha in seen:
                continue
            if any(p.contains_mask(node.children[j], alpha) for j in range(i)):
                continue
            seen.add(alpha)
            out.append(alpha)
    return out


def lower_median(xs: Sequence) -> object:
    ys = sorted(xs)
    return ys[(len(ys) - 1) // 2]


# -- results ----------------------------------------------------------------------


@dataclass
class RunResult:
    """One countCore run.  ``estimate`` is 0 whenever ``aborted`` is set."""

    estimate: float
    exact_path: bool
    aborted: bool = False
    abort_reason: str | None = None
    p_root: dict | None = None
    violations: list[str] = field(default_factory=list)
    deviations: list[str] = field(default_factory=list)
    nodes: list[dict] | None = None

    def to_json(self, diagnostics: bool = False) -> dict:
        d = {
            "estimate": self.estimate,
            "exact_path": self.exact_path,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "p_root": self.p_root,
            "violations": list(self.violations),
            "deviations": list(self.deviations),
        }
        if diagnostics and self.nodes is not None:
            d["nodes"] = self.nodes
        return d


@dataclass
class CountResult:
    estimate: float
    exact_path: bool
    params: Params
    seed: int
    runs: list[RunResult]
    depth_reduced: bool
    program_size: int
    degree: int

    @property
    def violations(self) -> list[str]:
        return [v for r in self.runs for v in r.violations]

    @property
    def deviations(self) -> list[str]:
        out = list(self.params.deviations)
        for r in self.runs:
            for d in r.deviations:
                if d not in out:
                    out.append(d)
        return out

    def to_json(self, diagnostics: bool = False) -> dict:
        return {
            "estimate": self.estimate,
            "exact_path": self.exact_path,
            "aborted_runs": sum(r.aborted for r in self.runs),
            "mode": self.params.mode,
            "seed": self.seed,
            "params": self.params.to_json(),
            "program": {"size": self.program_size, "degree": self.degree, "depth_reduced": self.depth_reduced},
            "deviations": self.deviations,
            "violations": self.violations,
            "runs": [r.to_json(diagnostics) for r in self.runs],
        }


# -- the core ---------------------------------------------------------------------


def node_rng(seed: int, run: int, node: int) -> np.random.Generator:
    """Independent stream for one node of one run."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(run, node))
    return np.random.Generator(np.random.PCG64(ss))


class _Run:
    def __init__(self, p: Program, params: Params, info: SupportInfo, seed: int, run: int, keep_nodes: bool) -> None:
        self.p = p
        self.params = params
        self.info = info
        self.seed = seed
        self.run = run
        self.ar = Arith.from_params(params)
        self.R = params.samples
        self.width = smp.words_for(p.num_vars)
        self.cap = MEMORY_GUARD_ELEMENTS
        self.pv: dict[int, PValue] = {}
        self.sets: dict[int, smp.SampleSets] = {}
        self.violations: list[str] = []
        self.deviations: list[str] = []
        self.diag: list[dict] | None = [] if keep_nodes else None

    def ratio(self, a: PValue, b: PValue, where: str) -> float:
        t = self.ar.ratio(a, b)
        if t < 0 or t > 1 + 1e-12:
            self.violations.append(f"{where}: reduce ratio {t!r} outside [0, 1]")
        return min(max(t, 0.0), 1.0)

    def check(self, q: int, kids: tuple[int, ...]) -> None:
        pq = self.pv[q]
        if self.ar.cmp(pq, ONE) > 0:
            self.violations.append(f"node {q}: p(q) > 1")
        for c in kids:
            if self.ar.cmp(pq, self.pv[c]) > 0:
                self.violations.append(f"node {q}: p(q) > p(child {c})")
        h = self.info.effective_height[q]
        if h > 0 and not self.ar.is_acceptable(h, pq):
            self.violations.append(f"node {q}: p(q) is not acceptable at level {h}")

    def _kids(self, q: int) -> tuple[int, ...]:
        if self.info.effective_height[q] == 0:
            return ()
        node = self.p.nodes[q]
        return node.children if isinstance(node, Plus) else (node.left, node.right)

    def execute(self, order: list[int]) -> RunResult:
        remaining = dict.fromkeys(order, 0)
        for q in order:
            for c in set(self._kids(q)):
                remaining[c] += 1
        try:
            for q in order:
                self.process(q)
                for c in set(self._kids(q)):
                    remaining[c] -= 1
                    if remaining[c] == 0:
                        self.sets.pop(c, None)
        except smp.SampleLimit as exc:
            return RunResult(0.0, False, True, exc.reason, None, self.violations, self.deviations, self.diag)
        p_root = self.pv[self.p.root]
        return RunResult(
            self.ar.estimate(p_root), False, False, None, p_root.describe(), self.violations, self.deviations, self.diag
        )

    def process(self, q: int) -> None:
        node = self.p.nodes[q]
        h = self.info.effective_height[q]
        rng = node_rng(self.seed, self.run, q)
        extra: dict = {}
        if h == 0:
            kids: tuple[int, ...] = ()
            supp = self.info.exact[q]
            self.pv[q] = self.ar.height_zero(len(supp))
            arr = smp.masks_to_array(supp, self.width)
            t = self.ar.value(self.pv[q])
            self.sets[q] = smp.repeated_support(arr, self.R, t, rng, self.params.theta, self.cap)
        elif isinstance(node, Times):
            kids = (node.left, node.right)
            extra = self.times(q, node, h, rng)
        else:
            kids = node.children
            extra = self.plus(q, node, h, rng)
        self.check(q, kids)
        if self.diag is not None:
            sizes = self.sets[q].sizes()
            self.diag.append(
                {
                    "node": q,
                    "kind": type(node).__name__.lower(),
                    "effective_height": h,
                    "p": self.ar.value(self.pv[q]),
                    "p_symbolic": self.pv[q].describe(),
                    "mean_size": float(sizes.mean()) if sizes.size else 0.0,
                    "max_size": int(sizes.max()) if sizes.size else 0,
                    **extra,
                }
            )

    def times(self, q: int, node: Times, h: int, rng) -> dict:
        p1, p2 = self.pv[node.left], self.pv[node.right]
        s1, s2 = self.sets[node.left], self.sets[node.right]
        sixteen_n = Fraction(16 * self.params.n)
        if p1.is_one and p2.is_one and self.params.mode == PRACTICAL:
            size = int(s1.sizes()[0]) * int(s2.sizes()[0])
            v = PValue(min(Fraction(1), sixteen_n / size))
            branch = "both-one"
            msg = "times node with both children at p = 1 uses min(1, 16n/(|S1(q1)| |S1(q2)|))"
            if msg not in self.deviations:
                self.deviations.append(msg)
        elif p1.is_one:
            v = Arith.scale(p2, Fraction(1, int(s1.sizes()[0])))
            branch = "left-one"
        elif p2.is_one:
            v = Arith.scale(p1, Fraction(1, int(s2.sizes()[0])))
            branch = "right-one"
        else:
            v = Arith.scale(Arith.mul(p1, p2), 1 / sixteen_n)
            branch = "general"
        pq = self._round(h, v, q)
        self.pv[q] = pq
        t = self.ratio(pq, Arith.mul(p1, p2), f"node {q}")
        self.sets[q] = smp.product(s1, s2, t, rng, self.params.theta, self.cap)
        return {"branch": branch}

    def plus(self, q: int, node: Plus, h: int, rng) -> dict:
        kids = node.children
        rho = self.ar.min(*(self.pv[c] for c in kids))
        guard = len(kids) * self.params.theta
        parts = []
        index = smp.first_child_index(self.p, q, self.width) if len(kids) > 1 else None
        for i, c in enumerate(kids):
            t = self.ratio(rho, self.pv[c], f"node {q} child {c}")
            part = smp.thin(self.sets[c], t, rng, self.cap)
            if i > 0:
                part = smp.dense(part)
                part = smp.select(part, index.lookup(part.vals) == i)
            parts.append(part)
        hat = smp.concat_rows(parts)
        sizes = hat.sizes()
        if sizes.size and int(sizes.max()) >= guard:
            raise smp.SampleLimit("memory guard")
        sums = sizes.reshape(self.params.n_t, self.params.n_s).sum(axis=1)
        med = int(lower_median(sums.tolist()))
        if med == 0:
            target = rho
            rho_hat = None
        else:
            factor = Fraction(16 * self.params.n * self.params.n_s, med)
            rho_hat = Arith.scale(rho, factor)
            target = rho_hat if factor < 1 else rho
        pq = self._round(h, target, q)
        self.pv[q] = pq
        t = self.ratio(pq, rho, f"node {q}")
        out = smp.thin(hat, t, rng, self.cap)
        smp.check_theta(out.sizes(), self.params.theta)
        self.sets[q] = out
        return {
            "rho": self.ar.value(rho),
            "rho_hat": None if rho_hat is None else self.ar.value(rho_hat),
            "median_batch_sum": med,
        }

    def _round(self, h: int, v: PValue, q: int) -> PValue:
        try:
            return self.ar.round_down(h, v)
        except GridExhausted as exc:
            raise GridExhausted(f"node {q}: {exc}") from None


def _sample_budget(params: Params) -> None:
    if params.samples > 10**8:
        raise ResourceError(
            f"{params.samples} sample sets per node cannot be held in memory; "
            "use practical mode with smaller n_s/n_t"
        )


def count_core(
    p: Program,
    params: Params,
    seed: int,
    run: int = 0,
    info: SupportInfo | None = None,
    diagnostics: bool = False,
) -> RunResult:
    """One run: exact count when the root has few monomials, else the sampling sweep."""
    info = capped_support(p, params.support_threshold) if info is None else info
    if info.is_exact(p.root):
        return RunResult(float(len(info.exact[p.root])), True, p_root=None)
    _sample_budget(params)
    # nodes of effective height 0 are enumerated, so nothing below them is needed
    eh = info.effective_height
    needed: set[int] = set()
    stack = [p.root]
    while stack:
        u = stack.pop()
        if u in needed:
            continue
        needed.add(u)
        node = p.nodes[u]
        if eh[u] > 0:
            stack.extend(node.children if isinstance(node, Plus) else (node.left, node.right))
    # children precede parents, so index order is a valid bottom-up order
    order = sorted(needed)
    return _Run(p, params, info, seed, run, diagnostics).execute(order)


def _run_worker(args) -> RunResult:
    p, params, seed, run, diagnostics = args
    return count_core(p, params, seed, run, diagnostics=diagnostics)


def run_many(p: Program, params: Params, seed: int, runs: Sequence[int], jobs: int = 1, diagnostics: bool = False) -> list[RunResult]:
    tasks = [(p, params, seed, r, diagnostics) for r in runs]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_worker, tasks))


def counter(
    p: Program,
    epsilon: float,
    delta: float,
    mode: str = PRACTICAL,
    overrides: dict | None = None,
    seed: int = 0,
    jobs: int = 1,
    diagnostics: bool = False,
) -> CountResult:
    """Median of m independent runs on the depth-reduced program."""
    reduced = reduce_depth(p)
    params = derive_params(reduced, epsilon, delta, mode, overrides)
    info = capped_support(reduced, params.support_threshold)
    if info.is_exact(reduced.root):
        # deterministic: every run would return the same exact count
        exact = count_core(reduced, params, seed, 0, info)
        runs = [exact]
        estimate = exact.estimate
        exact_path = True
    else:
        runs = run_many(reduced, params, seed, range(params.m), jobs, diagnostics)
        estimate = float(lower_median([r.estimate for r in runs]))
        exact_path = False
    return CountResult(
        estimate=estimate,
        exact_path=exact_path,
        params=params,
        seed=seed,
        runs=runs,
        depth_reduced=reduced.nodes != p.nodes,
        program_size=reduced.size,
        degree=reduced.degree,
    )


__all__ = [
    "CountResult",
    "ResourceError",
    "RunResult",
    "count_core",
    "counter",
    "lower_median",
    "node_rng",
    "reduce_set",
    "run_many",
    "union_filter",
    "STRICT",
    "PRACTICAL",
]
