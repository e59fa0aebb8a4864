"""Approximate counting of CFG slices and DNNF models through (+,x) programs."""

from .engine import CountResult, RunResult, count_core, counter, reduce_set, union_filter
from .params import PRACTICAL, STRICT, Params, derive_params, params_for
from .pipeline import count_cfg, count_dnnf
from .program import Program, capped_support, parse_program, validate_program

__all__ = [
    "CountResult",
    "PRACTICAL",
    "Params",
    "Program",
    "RunResult",
    "STRICT",
    "capped_support",
    "count_cfg",
    "count_core",
    "count_dnnf",
    "counter",
    "derive_params",
    "params_for",
    "parse_program",
    "reduce_set",
    "union_filter",
    "validate_program",
]
