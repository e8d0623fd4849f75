"""Radial laws for ``chi**alpha`` and their Gumbel max-domain scaling functions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .specfun import ChiAlpha


class GMDAScalingUnavailableError(ValueError):
    def __init__(self, what: str = "model"):
        super().__init__(f"GMDA scaling unavailable for {what}")


class WeibullDomainError(GMDAScalingUnavailableError):
    """Finite-endpoint laws in the Weibull max-domain are outside the polar evaluator."""

    def __init__(self):
        ValueError.__init__(self, "radial law is in the Weibull max-domain; only Gumbel-domain laws are supported")


class ExtrapolationError(ValueError):
    pass


class RadialModel:
    """Interface: ``tail``, ``log_tail``, ``density``, ``scaling`` (the GMDA ``w``) and ``x_plus``."""

    x_plus: float = math.inf
    name: str = "radial"

    def tail(self, x):
        return np.exp(self.log_tail(x))

    def log_tail(self, x):
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def scaling(self, x):
        raise GMDAScalingUnavailableError(self.name)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


@dataclass(frozen=True)
class GaussianChi(RadialModel):
    """``chi**alpha`` with ``chi**2`` chi-square on ``d`` degrees of freedom."""

    d: int
    alpha: float
    name: str = field(default="gaussian_chi", repr=False)

    @property
    def law(self) -> ChiAlpha:
        return ChiAlpha(self.d, self.alpha)

    def log_tail(self, x):
        return self.law.log_tail(x)

    def tail(self, x):
        return self.law.tail(x)

    def density(self, x):
        return self.law.density(x)

    def scaling(self, x):
        x = np.asarray(x, dtype=float)
        return x ** (2.0 / self.alpha - 1.0) / self.alpha

    def describe(self):
        return {"kind": "GaussianChi", "d": self.d, "alpha": self.alpha}


@dataclass(frozen=True)
class Weibullian(RadialModel):
    """Tail ``c1 x^a exp(-c2 x^beta)``, capped at 1.

    For ``a > 0`` the expression rises before it decays; below its peak the
    tail is held at the peak value so that it stays nonincreasing.
    """

    c1: float
    a: float
    c2: float
    beta: float
    name: str = field(default="weibullian", repr=False)

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0 or self.beta <= 0:
            raise ValueError("need c1, c2, beta > 0")

    @property
    def peak(self) -> float:
        return (self.a / (self.c2 * self.beta)) ** (1 / self.beta) if self.a > 0 else 0.0

    def log_tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), self.peak)
        with np.errstate(divide="ignore"):
            out = math.log(self.c1) + self.a * np.log(x) - self.c2 * x**self.beta
        return np.minimum(out, 0.0)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = self.c2 * self.beta * x ** (self.beta - 1) - self.a / x
            flat = (x <= self.peak) | (self.log_tail(x) >= 0.0)
        return np.where(flat, 0.0, np.exp(self.log_tail(x)) * rate)

    def scaling(self, x):
        x = np.asarray(x, dtype=float)
        return self.beta * self.c2 * x ** (self.beta - 1)

    def describe(self):
        return {"kind": "Weibullian", "c1": self.c1, "a": self.a, "c2": self.c2, "beta": self.beta}


@dataclass(frozen=True)
class PowerTransformed(RadialModel):
    """Law of ``R**beta`` for a base model of ``R``."""

    base: RadialModel
    beta: float
    name: str = field(default="power", repr=False)

    @property
    def x_plus(self):
        return self.base.x_plus**self.beta

    def log_tail(self, x):
        return self.base.log_tail(np.asarray(x, dtype=float) ** (1.0 / self.beta))

    def tail(self, x):
        return self.base.tail(np.asarray(x, dtype=float) ** (1.0 / self.beta))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.base.density(x ** (1 / self.beta)) * x ** (1 / self.beta - 1) / self.beta

    def scaling(self, x):
        x = np.asarray(x, dtype=float)
        y = x ** (1.0 / self.beta)
        return self.base.scaling(y) * y / (self.beta * x)

    def describe(self):
        return {"kind": "PowerTransformed", "beta": self.beta, "base": self.base.describe()}


@dataclass(frozen=True)
class FiniteEndpoint(RadialModel):
    """Tail ``(1 - x/x_plus)^k`` on ``(0, x_plus)``; a Weibull max-domain law."""

    endpoint: float
    k: float = 1.0

    @property
    def x_plus(self):
        return self.endpoint

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.k * np.log(np.clip(1.0 - x / self.endpoint, 0.0, 1.0))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x < self.endpoint)
        return np.where(inside, self.k / self.endpoint * np.clip(1 - x / self.endpoint, 0, 1) ** (self.k - 1), 0.0)

    def scaling(self, x):
        raise WeibullDomainError()

    def describe(self):
        return {"kind": "FiniteEndpoint", "x_plus": self.endpoint, "k": self.k}


class UserTabulated(RadialModel):
    """Tabulated tail, interpolated monotonically in log-tail; no extrapolation."""

    name = "user_tabulated"

    def __init__(self, x, tail):
        x = np.asarray(x, dtype=float)
        tail = np.asarray(tail, dtype=float)
        if x.ndim != 1 or x.shape != tail.shape or x.size < 2:
            raise ValueError("need matching 1-d grids with at least two points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x grid must be strictly increasing")
        if np.any(np.diff(tail) > 0):
            raise ValueError("tail must be nonincreasing")
        if np.any(tail < 0) or np.any(tail > 1):
            raise ValueError("tail values must lie in [0, 1]")
        self.x = x
        self.values = tail
        zero = np.flatnonzero(tail == 0)
        self.endpoint = float(x[zero[0]]) if zero.size else math.inf
        pos = tail > 0
        self._interp = PchipInterpolator(x[pos], np.log(tail[pos]), extrapolate=False)

    @property
    def x_plus(self):
        return self.endpoint

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x[0]) or np.any(x > self.x[-1]):
            raise ExtrapolationError(f"x outside the tabulated range [{self.x[0]}, {self.x[-1]}]")
        return x

    def log_tail(self, x):
        x = self._check(x)
        with np.errstate(divide="ignore"):
            out = np.where(x >= self.endpoint, -np.inf, self._interp(np.minimum(x, self._interp.x[-1])))
        return out

    def density(self, x):
        x = self._check(x)
        return -self._interp.derivative()(x) * np.exp(self.log_tail(x))

    def describe(self):
        return {"kind": "UserTabulated", "points": int(self.x.size), "x_range": [float(self.x[0]), float(self.x[-1])]}

    @classmethod
    def from_csv(cls, path: str | Path) -> "UserTabulated":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if rows:
                        raise
                    continue  # header line
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1])


def scaling_function(m: RadialModel, x):
    """The GMDA scaling ``w`` with ``P{R > x + t/w(x)} ~ e^-t P{R > x}``."""
    if np.any(np.asarray(x) >= m.x_plus):
        raise ValueError("x must lie below the upper endpoint")
    return m.scaling(x)


def gmda_selfcheck(m: RadialModel, x: float, t_grid) -> float:
    """``max_t |P{R > x + t/w(x)} / (e^-t P{R > x}) - 1|``."""
    t = np.asarray(t_grid, dtype=float)
    w = float(scaling_function(m, x))
    lt = np.asarray(m.log_tail(x + t / w)) - (-t + float(m.log_tail(x)))
    return float(np.max(np.abs(np.expm1(lt))))
