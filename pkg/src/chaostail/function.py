"""Homogeneous functions with exact first and second derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exprlang import DualTower, Expr, check_homogeneity, parse


class NotC2Error(ArithmeticError):
    """Raised when a second derivative is requested at a nonsmooth point."""


@dataclass(frozen=True)
class HomogeneousFn:
    """A function ``g: R^d -> R`` with ``g(x t) = x**alpha g(t)`` for ``x > 0``.

    ``func`` receives a list of ``dim`` components.  A component is either a
    float, a 1-d numpy array (one value per point) or a :class:`DualTower`, so
    one definition serves plain evaluation, batches and second-order jets.
    """

    func: Callable[[list], object]
    alpha: float
    dim: int
    name: str = "g"
    source: str | None = None

    def __call__(self, point) -> float:
        point = np.asarray(point, dtype=float)
        return float(np.asarray(self.func(list(point)), dtype=float))

    def batch(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.func([points[:, i] for i in range(self.dim)])
        return np.broadcast_to(np.asarray(out, dtype=float), points.shape[:1]).copy()

    def jet(self, point) -> DualTower:
        """Value, gradient and Hessian at ``point`` (shape ``(d,)`` or ``(n, d)``)."""
        point = np.asarray(point, dtype=float)
        out = self.func(DualTower.seeds(point))
        if not isinstance(out, DualTower):
            seed = DualTower.seed(np.zeros(point.shape[:-1]), 0, self.dim)
            out = seed._const(out)
        return out

    def gradient(self, point) -> np.ndarray:
        return np.asarray(self.jet(point).first)

    def hessian(self, point, require_c2: bool = False) -> np.ndarray:
        t = self.jet(point)
        if require_c2 and t.nonsmooth:
            raise NotC2Error("g not C² at maximizer")
        return np.asarray(t.second)

    def compose_linear(self, L, name: str | None = None, dim: int | None = None) -> "HomogeneousFn":
        """Return ``u -> g(L u)``; ``L`` has shape ``(self.dim, k)``."""
        L = np.asarray(L, dtype=float)
        if L.ndim != 2 or L.shape[0] != self.dim:
            raise ValueError(f"linear map must have {self.dim} rows")
        k = L.shape[1] if dim is None else dim
        inner = self.func

        def composed(args):
            return inner([_lincomb(L[i], args) for i in range(L.shape[0])])

        return HomogeneousFn(composed, self.alpha, k, name or f"{self.name}∘L", self.source)

    def homogeneity(self, trials: int = 100, seed: int = 0):
        return check_homogeneity(self, self.alpha, trials, seed)

    @classmethod
    def from_expr(cls, e: Expr | str, alpha: float, dim: int | None = None,
                  name: str | None = None) -> "HomogeneousFn":
        if isinstance(e, str):
            if dim is None:
                raise ValueError("dim is required when parsing a string")
            e = parse(e, dim)
        return cls(e.evaluate, float(alpha), e.dim, name or e.source or "g", e.source)


def _lincomb(coeffs: Sequence[float], args: list):
    out = None
    for c, a in zip(coeffs, args):
        if c == 0.0:
            continue
        term = a * c
        out = term if out is None else out + term
    if out is None:
        return args[0] * 0.0
    return out
