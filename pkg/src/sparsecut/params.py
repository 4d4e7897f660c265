"""Tunable constants and the exception hierarchy shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from fractions import Fraction


class SparsecutError(Exception):
    """Base class for library errors."""


class InvalidCutError(SparsecutError, ValueError):
    pass


class GraphFormatError(SparsecutError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class PreconditionError(SparsecutError, ValueError):
    pass


class UndefinedConductanceError(SparsecutError, ValueError):
    pass


class NotAMatchingError(SparsecutError):
    pass


class NoSuchSet(SparsecutError):
    """No set meeting the requested size/sparsity exists (or the relaxation proves so)."""


class RandomizedFailure(SparsecutError):
    """A randomized routine exhausted its attempt budget."""


class OracleBudgetError(SparsecutError, ValueError):
    pass


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**9)
    return Fraction(value)


@dataclass(frozen=True)
class ParamSet:
    """Every constant the algorithms leave as "large enough", with desk-scale defaults.

    ``rho``/``improve_depth``/``inner_threshold``/``precondition_threshold`` drive
    ImproveCut; they are chosen so that the flow argument closes exactly:
    ``inner_threshold + 1/rho**2 <= 1/improve_depth`` and
    ``precondition_threshold = 1/(2 rho**2)``.
    """

    eps: Fraction = Fraction(1, 100)
    rho: Fraction = Fraction(4)
    improve_depth: int = 8
    c: int = 8
    C: int = 8
    lam: int = 4
    alpha: int = 4
    rounds_d: int = 10
    c_rep: int = 4
    balance_b: Fraction = Fraction(1, 100)
    precondition_threshold: Fraction = Fraction(1, 32)
    inner_threshold: Fraction = Fraction(1, 16)
    sample_factor: int = 10
    sample_d: int = 200
    vertex_sample_c: Fraction = Fraction(1)
    potential_fraction: Fraction = Fraction(1, 100)
    seed: int = 0
    mode: str = "exact"
    exhaustive_limit: int = 20
    retries: int = 5
    lp_tol: float = 1e-7

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("Fraction",) or isinstance(f.default, Fraction):
                object.__setattr__(self, f.name, as_fraction(v))
        self.validate()

    def validate(self) -> None:
        if not (0 < self.eps < 1):
            raise PreconditionError("eps must lie in (0, 1)")
        if self.alpha <= 2:
            raise PreconditionError("alpha must exceed 2")
        if self.mode not in ("exact", "heuristic"):
            raise PreconditionError(f"unknown mode {self.mode!r}")
        positive = ("rho", "improve_depth", "c", "C", "lam", "rounds_d", "c_rep",
                    "balance_b", "precondition_threshold", "inner_threshold",
                    "sample_factor", "sample_d", "vertex_sample_c", "retries")
        for name in positive:
            if getattr(self, name) <= 0:
                raise PreconditionError(f"{name} must be positive")

    def with_overrides(self, **kw) -> "ParamSet":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Fraction) else v
        return out


def clamped_log(x) -> float:
    """Natural log clamped below at 1."""
    x = float(x)
    return max(math.log(x), 1.0) if x > 0 else 1.0
