"""Experiment configuration for parameter sweeps."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

from .errors import DataError

__all__ = ["METHODS", "ExperimentConfig"]

METHODS = ("spectral", "spectral+wls", "als", "oracle")


def _floats(s):
    return tuple(float(x) for x in str(s).replace(",", " ").split())


def _ints(s):
    out = []
    for tok in str(s).replace(",", " ").split():
        if ":" in tok:  # a:b is the half-open range
            lo, hi = tok.split(":")
            out.extend(range(int(lo), int(hi)))
        else:
            out.append(int(float(tok)))
    return tuple(out)


def _words(s):
    return tuple(str(s).replace(",", " ").split())


def _opt_float(s):
    return None if str(s).strip().lower() in ("", "none", "default") else float(s)


def _opt_int(s):
    return None if str(s).strip().lower() in ("", "none", "default") else int(float(s))


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise DataError(f"not a boolean: {s!r}")


_PARSERS = {
    "d": lambda s: int(float(s)),
    "m": lambda s: int(float(s)),
    "n": _ints,
    "sigma": _floats,
    "seeds": _ints,
    "methods": _words,
    "lambda_thresh": _opt_float,
    "n_init": _opt_int,
    "solver_seed": lambda s: int(float(s)),
    "observation": str,
    "alpha": float,
    "denoise": _bool,
    "wls_k": lambda s: int(float(s)),
    "als_max_iter": lambda s: int(float(s)),
    "workers": lambda s: int(float(s)),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: every ``(n, sigma, seed)`` grid point is run with every method.

    Seeds are instance seeds; the same seed gives the same ``W`` at every grid
    point so curves over ``n`` and ``sigma`` use common random numbers.
    ``workers`` only affects speed, never the output, and is left out of
    :meth:`config_hash`.
    """

    d: int = 4
    m: int = 12
    n: tuple = (10_000,)
    sigma: tuple = (0.4,)
    seeds: tuple = (0,)
    methods: tuple = ("spectral",)
    lambda_thresh: float | None = None
    n_init: int | None = None
    solver_seed: int = 0
    observation: str = "gaussian"
    alpha: float = 1.0
    denoise: bool = True
    wls_k: int = 6
    als_max_iter: int = 500
    workers: int = 1

    def __post_init__(self):
        if not self.n or not self.sigma or not self.seeds or not self.methods:
            raise DataError("n, sigma, seeds and methods must all be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise DataError("seeds must be distinct")
        bad = [mth for mth in self.methods if mth not in METHODS]
        if bad:
            raise DataError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
        if self.m < self.d or self.d < 1:
            raise DataError(f"need 1 <= d <= m, got d={self.d}, m={self.m}")
        if min(self.n) < 2 or min(self.sigma) < 0:
            raise DataError("sample sizes must be >= 2 and noise levels >= 0")
        if self.observation not in ("gaussian", "binomial"):
            raise DataError(f"unknown observation model {self.observation!r}")
        if self.workers < 1:
            raise DataError("workers must be positive")

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise DataError(f"unknown config key(s): {unknown}")
        parsed = {}
        for k, v in values.items():
            try:
                parsed[k] = _PARSERS[k](v) if isinstance(v, str) else v
            except ValueError as exc:
                raise DataError(f"bad value for {k}: {v!r} ({exc})") from None
        return cls(**parsed)

    def to_lines(self) -> list:
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = " ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            out.append(f"{k} = {v}")
        return out

    def config_hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k != "workers"}
        blob = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]
