"""Command-line entry point: ``slicecount <command> ...``.

Exit codes: 0 ok, 2 parse error, 3 parameter error, 4 circuit shape,
5 oracle refusal.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import generators as gen
from .depth import reduce_depth
from .engine import ResourceError, counter
from .grammar import GrammarError, cfg_slice_program, grammar_slice, parse_grammar, to_cnf
from .nnf import NnfError, check_decomposable, check_smooth, eliminate_constants, parse_nnf, prepare_dnnf, smooth
from .oracle import OracleRefusal, brute_cfg_count, brute_dnnf_count, run_coverage_trials, support_masks
from .params import PRACTICAL, STRICT, ParamError
from .pipeline import count_cfg, count_dnnf
from .program import ProgramError, parse_program, validate_program
from .pvalue import GridExhausted

SCHEMA = "slicecount/1"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PARAMS = 3
EXIT_SHAPE = 4
EXIT_REFUSAL = 5


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


# -- input ------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc.strerror or exc}") from None


def _kind(path: str, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".nnf":
        return "nnf"
    if suffix in (".cfg", ".gram", ".grammar"):
        return "cfg"
    return "program"


def _load(path: str, kind: str):
    text = _read(path)
    try:
        if kind == "cfg":
            return parse_grammar(text)
        if kind == "nnf":
            return parse_nnf(text)
        return parse_program(text)
    except (GrammarError, NnfError, ProgramError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None


def _need_n(args) -> int:
    if args.n is None:
        raise CliError(EXIT_PARAMS, "--n is required for grammars")
    if args.n < 1:
        raise CliError(EXIT_PARAMS, "--n must be at least 1")
    return args.n


def _require_decomposable(c) -> None:
    bad = check_decomposable(c)
    if bad:
        lines = "; ".join(str(v) for v in bad)
        raise CliError(EXIT_SHAPE, f"circuit is not decomposable: {lines}")


def _require_valid(p) -> None:
    bad = validate_program(p)
    if bad:
        raise CliError(EXIT_SHAPE, "invalid program: " + "; ".join(str(v) for v in bad))


def _mode(args) -> str:
    return STRICT if args.paper_strict else PRACTICAL


def _overrides(args) -> dict:
    ov = {
        "n_s": args.override_ns,
        "n_t": args.override_nt,
        "theta": args.override_theta,
        "support_threshold": args.override_threshold,
        "m": args.override_m,
    }
    ov = {k: v for k, v in ov.items() if v is not None}
    if ov and args.paper_strict:
        raise CliError(EXIT_PARAMS, "--override-* flags imply practical mode; drop --paper-strict")
    return ov


# -- output -----------------------------------------------------------------------


def _flatten(prefix: str, value, out: list[str]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list) and value and isinstance(value[0], dict):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append(f"{prefix}: {json.dumps(value)}")


def _emit(args, command: str, body: dict) -> None:
    doc = {"schema": SCHEMA, "command": command, **body}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=False))
    else:
        lines: list[str] = []
        _flatten("", doc, lines)
        print("\n".join(lines))


# -- commands ---------------------------------------------------------------------


def cmd_count_cfg(args) -> int:
    g = _load(args.file, "cfg")
    n = _need_n(args)
    res = count_cfg(g, n, args.epsilon, args.delta, _mode(args), _overrides(args), args.seed, args.jobs, args.diagnostics)
    body = {"input": {"kind": "cfg", "n": n}, "count_estimate": res.estimate, "exact_path": res.exact_path}
    detail = res.to_json(args.diagnostics)
    detail.pop("estimate", None)
    detail.pop("exact_path", None)
    detail.pop("smoothed", None)
    body.update(detail)
    body.setdefault("seed", args.seed)
    _emit(args, "count-cfg", body)
    return EXIT_OK


def cmd_count_dnnf(args) -> int:
    c = _load(args.file, "nnf")
    _require_decomposable(c)
    res = count_dnnf(c, args.epsilon, args.delta, _mode(args), _overrides(args), args.seed, args.jobs, args.diagnostics)
    body = {
        "input": {"kind": "nnf", "num_vars": c.num_vars},
        "count_estimate": res.estimate,
        "exact_path": res.exact_path,
        "smoothed": res.smoothed,
    }
    detail = res.to_json(args.diagnostics)
    for k in ("estimate", "exact_path", "smoothed"):
        detail.pop(k, None)
    body.update(detail)
    body.setdefault("seed", args.seed)
    _emit(args, "count-dnnf", body)
    return EXIT_OK


def cmd_count_program(args) -> int:
    p = _load(args.file, "program")
    _require_valid(p)
    res = counter(p, args.epsilon, args.delta, _mode(args), _overrides(args), args.seed, args.jobs, args.diagnostics)
    detail = res.to_json(args.diagnostics)
    body = {
        "input": {"kind": "program", "size": p.size, "degree": p.degree},
        "count_estimate": detail.pop("estimate"),
        "exact_path": detail.pop("exact_path"),
    }
    body.update(detail)
    _emit(args, "count-program", body)
    return EXIT_OK


def cmd_exact(args) -> int:
    kind = _kind(args.file, args.format)
    obj = _load(args.file, kind)
    if kind == "cfg":
        n = _need_n(args)
        body = {"input": {"kind": "cfg", "n": n}, "count": brute_cfg_count(obj, n), "method": "cyk enumeration"}
    elif kind == "nnf":
        body = {"input": {"kind": "nnf", "num_vars": obj.num_vars}, "count": brute_dnnf_count(obj), "method": "assignment enumeration"}
    else:
        _require_valid(obj)
        body = {"input": {"kind": "program", "size": obj.size}, "count": len(support_masks(obj)), "method": "support enumeration"}
    _emit(args, "exact", body)
    return EXIT_OK


def cmd_validate(args) -> int:
    kind = _kind(args.file, args.format)
    obj = _load(args.file, kind)
    if kind == "cfg":
        cnf = to_cnf(obj)
        body = {"input": {"kind": "cfg"}, "valid": True, "is_cnf": obj.is_cnf(), "cnf_rules": len(cnf.grammar.rules), "violations": []}
    elif kind == "nnf":
        dec = [str(v) for v in check_decomposable(obj)]
        sm = [str(v) for v in check_smooth(obj)]
        body = {"input": {"kind": "nnf"}, "valid": not dec, "decomposable": not dec, "smooth": not sm, "violations": dec + sm}
    else:
        bad = [str(v) for v in validate_program(obj)]
        body = {"input": {"kind": "program"}, "valid": not bad, "violations": bad}
        if not bad:
            body.update({"size": obj.size, "degree": obj.degree, "depth": obj.depth})
    _emit(args, "validate", body)
    return EXIT_OK if body["valid"] else EXIT_SHAPE


def cmd_convert(args) -> int:
    kind = _kind(args.file, args.format)
    obj = _load(args.file, kind)
    target = args.to
    if kind == "cfg":
        if target == "cnf":
            text = to_cnf(obj).grammar.to_text()
        elif target == "uc":
            text = cfg_slice_program(to_cnf(obj), _need_n(args)).to_text()
        elif target == "program":
            sl = grammar_slice(obj, _need_n(args))
            if sl.program is None:
                raise CliError(EXIT_SHAPE, "the slice is empty; there is no program to write")
            text = sl.program.to_text()
        else:
            raise CliError(EXIT_PARAMS, f"cannot convert a grammar to {target}")
    elif kind == "nnf":
        _require_decomposable(obj)
        if target == "smooth-nnf":
            reduced = eliminate_constants(obj)
            if isinstance(reduced, bool):
                raise CliError(EXIT_SHAPE, f"circuit is constant {str(reduced).lower()}")
            text = smooth(reduced).to_text()
        elif target == "program":
            prep = prepare_dnnf(obj)
            if prep.program is None:
                raise CliError(EXIT_SHAPE, f"circuit is constant {str(prep.constant).lower()}")
            text = prep.program.to_text()
        else:
            raise CliError(EXIT_PARAMS, f"cannot convert a circuit to {target}")
    else:
        _require_valid(obj)
        if target == "program":
            text = obj.to_text()
        elif target == "reduced":
            text = reduce_depth(obj, force=True).to_text()
        else:
            raise CliError(EXIT_PARAMS, f"cannot convert a program to {target}")
    if args.out:
        Path(args.out).write_text(text)
        _emit(args, "convert", {"input": {"kind": kind}, "to": target, "out": args.out})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    kind = _kind(args.file, args.format)
    obj = _load(args.file, kind)
    if kind == "cfg":
        n = _need_n(args)
        exact = brute_cfg_count(obj, n)
        sl = grammar_slice(obj, n)
        if sl.program is None:
            raise CliError(EXIT_SHAPE, "the slice is empty")
        prog = sl.program
    elif kind == "nnf":
        _require_decomposable(obj)
        exact = brute_dnnf_count(obj)
        prep = prepare_dnnf(obj)
        if prep.program is None:
            raise CliError(EXIT_SHAPE, f"circuit is constant {str(prep.constant).lower()}")
        prog = prep.program
    else:
        _require_valid(obj)
        prog = obj
        exact = None
    rep = run_coverage_trials(
        prog, args.epsilon, args.delta, _mode(args), _overrides(args), args.trials, args.seed, exact, args.jobs
    )
    body = {"input": {"kind": kind}, "mode": _mode(args), "overrides": _overrides(args), "report": rep.to_json(args.diagnostics)}
    _emit(args, "stats", body)
    return EXIT_OK


def cmd_generate(args) -> int:
    rng = random.Random(args.seed)
    shape = args.shape
    if shape == "program":
        text = gen.random_program(rng, args.degree, args.num_vars).to_text()
    elif shape in ("chain", "comb"):
        text = gen.deep_program(rng, args.degree, shape).to_text()
    elif shape == "sop":
        text = gen.sum_of_products(rng, args.degree, args.blocks, (1, args.factor_max)).to_text()
    elif shape == "grammar":
        text = gen.random_grammar(rng).to_text()
    else:
        text = gen.random_dnnf(rng, args.num_vars or 8).to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, randomized: bool) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if not randomized:
        return
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
    p.add_argument("--paper-strict", action="store_true", help="use the unscaled parameters (astronomically large)")
    p.add_argument("--override-ns", type=int)
    p.add_argument("--override-nt", type=int)
    p.add_argument("--override-theta", type=int)
    p.add_argument("--override-threshold", type=int)
    p.add_argument("--override-m", type=int)
    p.add_argument("--diagnostics", action="store_true", help="include per-run (and per-node) details")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slicecount", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-cfg", help="estimate the number of words of length n")
    p.add_argument("file")
    p.add_argument("--n", type=int, required=True)
    _common(p, True)
    p.set_defaults(func=cmd_count_cfg)

    p = sub.add_parser("count-dnnf", help="estimate the number of models of a DNNF (c2d format)")
    p.add_argument("file")
    _common(p, True)
    p.set_defaults(func=cmd_count_dnnf)

    p = sub.add_parser("count-program", help="estimate |supp| of a (+,x) program")
    p.add_argument("file")
    _common(p, True)
    p.set_defaults(func=cmd_count_program)

    for name, func, hlp in (
        ("exact", cmd_exact, "exact count by enumeration"),
        ("validate", cmd_validate, "check program / circuit invariants"),
    ):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("file")
        p.add_argument("--format", choices=("auto", "program", "cfg", "nnf"), default="auto")
        p.add_argument("--n", type=int)
        _common(p, False)
        p.set_defaults(func=func)

    p = sub.add_parser("convert", help="write an intermediate artifact")
    p.add_argument("file")
    p.add_argument("--format", choices=("auto", "program", "cfg", "nnf"), default="auto")
    p.add_argument("--to", choices=("cnf", "uc", "program", "smooth-nnf", "reduced"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--out", help="output path (default: stdout)")
    _common(p, False)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="coverage trials against the exact count")
    p.add_argument("file")
    p.add_argument("--format", choices=("auto", "program", "cfg", "nnf"), default="auto")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int, default=200)
    _common(p, True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("shape", choices=("program", "chain", "comb", "sop", "grammar", "dnnf"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--num-vars", type=int)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--factor-max", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "paper_strict", False):
        print(
            "warning: --paper-strict parameters are astronomically large for desk-scale inputs",
            file=sys.stderr,
        )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParamError, ResourceError, GridExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except NnfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except OracleRefusal as exc:
        print(f"error: oracle refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
