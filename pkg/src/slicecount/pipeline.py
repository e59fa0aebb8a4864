"""End-to-end counting for grammars and DNNF circuits."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import CountResult, counter
from .grammar import Grammar, grammar_slice
from .nnf import NnfCircuit, prepare_dnnf
from .params import PRACTICAL


@dataclass
class PipelineResult:
    """``result`` is ``None`` when the answer was decided without running the counter."""

    estimate: float
    exact_path: bool
    result: CountResult | None
    note: str | None = None
    smoothed: bool = False

    def to_json(self, diagnostics: bool = False) -> dict:
        if self.result is None:
            d = {"estimate": self.estimate, "exact_path": True, "note": self.note}
        else:
            d = self.result.to_json(diagnostics)
        d["smoothed"] = self.smoothed
        return d


def count_cfg(
    g: Grammar,
    n: int,
    epsilon: float,
    delta: float,
    mode: str = PRACTICAL,
    overrides: dict | None = None,
    seed: int = 0,
    jobs: int = 1,
    diagnostics: bool = False,
) -> PipelineResult:
    """Estimate |L_n(G)|: CNF, slice program, (+,x) encoding, counter."""
    if n < 1:
        raise ValueError("n must be at least 1")
    sl = grammar_slice(g, n)
    if sl.program is None:
        return PipelineResult(0.0, True, None, "empty slice")
    res = counter(sl.program, epsilon, delta, mode, overrides, seed, jobs, diagnostics)
    return PipelineResult(res.estimate, res.exact_path, res)


def count_dnnf(
    c: NnfCircuit,
    epsilon: float,
    delta: float,
    mode: str = PRACTICAL,
    overrides: dict | None = None,
    seed: int = 0,
    jobs: int = 1,
    diagnostics: bool = False,
) -> PipelineResult:
    """Estimate the number of models: constants, smoothing, (+,x) encoding, counter."""
    prep = prepare_dnnf(c)
    if prep.program is None:
        count = float(2**c.num_vars) if prep.constant else 0.0
        return PipelineResult(count, True, None, f"circuit is constant {prep.constant}".lower())
    res = counter(prep.program, epsilon, delta, mode, overrides, seed, jobs, diagnostics)
    return PipelineResult(res.estimate, res.exact_path, res, smoothed=prep.smoothed)
