"""Run parameters for the randomized counter and their provenance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath

STRICT = "paper-strict"
PRACTICAL = "practical"

PRACTICAL_DEFAULTS = {"n_s": 200, "n_t": 9, "theta": 10**6}
OVERRIDE_KEYS = ("n_s", "n_t", "theta", "support_threshold", "m")
LN2_CLAMP = 4 * math.log(2)


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    """Everything a run needs besides the program and the seed.

    ``kappa_source`` records how kappa was obtained so that it can be
    recomputed at any precision: ``"eps"`` means eps' = epsilon and
    ``"ln2"`` means eps' was clamped to 4 ln 2.
    """

    epsilon: float
    delta: float
    n: int
    size: int
    num_vars: int
    epsilon_prime: float
    kappa: float
    kappa_source: str
    n_s: int
    n_t: int
    theta: int
    m: int
    support_threshold: int
    ell_max_log2: int
    mode: str
    deviations: tuple[str, ...] = field(default=())

    @property
    def samples(self) -> int:
        return self.n_s * self.n_t

    def kappa_mp(self) -> mpmath.mpf:
        cube = 4 * (self.n + 1) ** 3
        if self.kappa_source == "ln2":
            return 4 * mpmath.log(2) / cube
        f = Fraction(self.epsilon)
        return mpmath.mpf(f.numerator) / f.denominator / cube

    def to_json(self) -> dict:
        d = asdict(self)
        d["deviations"] = list(self.deviations)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Params":
        d = dict(d)
        d["deviations"] = tuple(d.get("deviations", ()))
        return cls(**d)


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ParamError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise ParamError(f"delta must lie in (0, 1), got {delta}")


def params_for(
    n: int,
    size: int,
    epsilon: float,
    delta: float,
    mode: str = PRACTICAL,
    overrides: dict | None = None,
    num_vars: int | None = None,
) -> Params:
    """Parameters for a program of degree ``n`` with ``size`` nodes."""
    _check_eps_delta(epsilon, delta)
    if n < 1 or size < 1:
        raise ParamError("degree and size must be positive")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(overrides) - set(OVERRIDE_KEYS)
    if unknown:
        raise ParamError(f"unknown overrides: {sorted(unknown)}")
    if mode not in (STRICT, PRACTICAL):
        raise ParamError(f"unknown mode {mode!r}")
    if mode == STRICT and overrides:
        raise ParamError("overrides are only allowed in practical mode")
    num_vars = n if num_vars is None else num_vars

    clamped = epsilon >= LN2_CLAMP
    eps_p = LN2_CLAMP if clamped else epsilon
    kappa = eps_p / (4 * (n + 1) ** 3)
    m = math.ceil(16 * math.log(1 / delta))
    threshold = 16 * n * size * size
    deviations: list[str] = []
    if mode == STRICT:
        if clamped:
            with mpmath.workdps(50):
                n_s = int(mpmath.ceil(12 / (mpmath.log(2) / (n + 1) ** 3) ** 2))
        else:
            k = Fraction(epsilon) / (4 * (n + 1) ** 3)
            n_s = math.ceil(12 / k**2)
        n_t = 8 * n * size
        theta = 512 * n_s * n_t * n * size
        ell_log2 = n
    else:
        n_s = PRACTICAL_DEFAULTS["n_s"]
        n_t = PRACTICAL_DEFAULTS["n_t"]
        theta = PRACTICAL_DEFAULTS["theta"]
        deviations.append(f"practical defaults n_s={n_s}, n_t={n_t}, theta={theta}")
        for key, val in overrides.items():
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                raise ParamError(f"override {key} must be a positive integer, got {val!r}")
        n_s = overrides.get("n_s", n_s)
        n_t = overrides.get("n_t", n_t)
        theta = overrides.get("theta", theta)
        m = overrides.get("m", m)
        threshold = overrides.get("support_threshold", threshold)
        for key in sorted(overrides):
            deviations.append(f"override {key}={overrides[key]}")
        # |supp(q)| <= 2^numVars always; 2^deg can be too small (e.g. CFG slices over 3 letters)
        ell_log2 = max(n, num_vars)
        if ell_log2 != n:
            deviations.append(f"acceptable values use ell <= 2^{ell_log2} (number of variables)")
    if n < 16:
        deviations.append(f"degree {n} < 16: the (1 +- eps, delta) guarantee is not claimed")
    return Params(
        epsilon=float(epsilon),
        delta=float(delta),
        n=n,
        size=size,
        num_vars=num_vars,
        epsilon_prime=eps_p,
        kappa=kappa,
        kappa_source="ln2" if clamped else "eps",
        n_s=int(n_s),
        n_t=int(n_t),
        theta=int(theta),
        m=int(m),
        support_threshold=int(threshold),
        ell_max_log2=ell_log2,
        mode=mode,
        deviations=tuple(deviations),
    )


def derive_params(program, epsilon: float, delta: float, mode: str = PRACTICAL, overrides: dict | None = None) -> Params:
    """Parameters for ``program``: n is the degree of the root and |P| the node count."""
    return params_for(program.degree, program.size, epsilon, delta, mode, overrides, program.num_vars)
