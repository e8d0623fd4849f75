"""Sphere-restricted Hessians at maximizers and derived determinants."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exprlang import DualTower
from .function import HomogeneousFn, NotC2Error
from .geometry import TangentFrame, tangent_frame, to_cartesian_components

log = logging.getLogger(__name__)

NONDEGENERATE_MAX = "nondegenerate_max"
DEGENERATE = "degenerate"
NOT_MAX = "not_max"


class RankMismatchError(ValueError):
    pass


class NotMaximumError(ValueError):
    """The point is not a local maximum of ``g`` on the sphere."""


class SaddleDegeneracyError(NotMaximumError):
    pass


@dataclass(frozen=True)
class TangentHessian:
    base: np.ndarray
    frame: TangentFrame
    H: np.ndarray
    A: np.ndarray
    eigenvalues: np.ndarray  # of A, ascending
    alpha: float
    g_hat: float

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0

    def default_rank_tol(self) -> float:
        return default_rank_tol(self.eigenvalues)

    def rank(self, rank_tol: float | None = None) -> int:
        tol = self.default_rank_tol() if rank_tol is None else rank_tol
        return int(np.sum(np.abs(self.eigenvalues) > tol))


def default_rank_tol(eigenvalues) -> float:
    eigenvalues = np.asarray(eigenvalues)
    rho = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return max(1e-6 * rho, 1e-12)


def tangent_hessian(g: HomogeneousFn, v, alpha: float, g_hat: float,
                    frame: TangentFrame | None = None) -> TangentHessian:
    """``H = U^T (grad^2 g)(v) U`` in the tangent frame ``U`` and ``A = H/(alpha g_hat) - I``."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    frame = frame or tangent_frame(v)
    t = g.jet(v)
    if t.nonsmooth:
        raise NotC2Error(f"g not C² at maximizer {v.tolist()}")
    U = frame.basis
    H = U.T @ np.asarray(t.second) @ U
    H = 0.5 * (H + H.T)
    A = H / (alpha * g_hat) - np.eye(H.shape[0])
    return TangentHessian(v, frame, H, A, np.linalg.eigvalsh(A), float(alpha), float(g_hat))


def nondegeneracy_check(t: TangentHessian, rank_tol: float | None = None) -> str:
    """Classify a maximizer by the spectrum of ``A``.

    Negative definiteness is what is tested; the determinant sign, which is
    ``(-1)^(d-1)`` at a nondegenerate maximum, is only logged.
    """
    tol = t.default_rank_tol() if rank_tol is None else rank_tol
    lam = t.eigenvalues
    log.debug("det A = %.6g at %s", float(np.prod(lam)) if lam.size else 1.0, t.base)
    if np.any(lam > tol):
        return NOT_MAX
    if np.any(np.abs(lam) <= tol):
        return DEGENERATE
    return NONDEGENERATE_MAX


def pseudo_det_minor(t: TangentHessian, m: int, rank_tol: float | None = None) -> float:
    """Product of the nonzero eigenvalues of ``A``; their number must be ``d-1-m``."""
    tol = t.default_rank_tol() if rank_tol is None else rank_tol
    nonzero = t.eigenvalues[np.abs(t.eigenvalues) > tol]
    expected = t.A.shape[0] - m
    if nonzero.size != expected:
        raise RankMismatchError(
            f"rank of A is {nonzero.size}, expected {expected} for m={m} "
            f"(eigenvalues {np.round(t.eigenvalues, 10).tolist()})")
    return float(np.prod(nonzero))


def detect_manifold_dim(g: HomogeneousFn, v, alpha: float, g_hat: float,
                        rank_tol: float | None = None) -> int:
    """Dimension of the maximizer manifold through ``v``: the nullity of ``A``."""
    t = tangent_hessian(g, v, alpha, g_hat)
    lam = t.eigenvalues
    tol = t.default_rank_tol() if rank_tol is None else rank_tol
    positive = lam > tol
    if positive.any():
        if (lam < -tol).any():
            raise SaddleDegeneracyError(f"saddle-like degeneracy at {t.base.tolist()}: eigenvalues {lam.tolist()}")
        raise NotMaximumError(f"not a maximum / inconsistent point {t.base.tolist()}: eigenvalues {lam.tolist()}")
    return int(np.sum(np.abs(lam) <= tol))


def angular_function_jet(g: HomogeneousFn, phi) -> DualTower:
    """Jet of ``phi -> g(to_cartesian(1, phi))``."""
    phi = np.asarray(phi, dtype=float)
    return g.func(to_cartesian_components(1.0, DualTower.seeds(phi)))


def angular_hessian(g: HomogeneousFn, phi) -> np.ndarray:
    t = angular_function_jet(g, phi)
    if t.nonsmooth:
        raise NotC2Error("g not C² at maximizer")
    return np.asarray(t.second)


def _fd_hessian_step(fun, x, h, f0):
    n = x.size
    H = np.empty((n, n))
    E = np.eye(n) * h
    for i in range(n):
        H[i, i] = (fun(x + E[i]) - 2 * f0 + fun(x - E[i])) / h**2
        for j in range(i):
            H[i, j] = H[j, i] = (fun(x + E[i] + E[j]) - fun(x + E[i] - E[j])
                                 - fun(x - E[i] + E[j]) + fun(x - E[i] - E[j])) / (4 * h**2)
    return H


def fd_hessian(fun: Callable[[np.ndarray], float], x, h: float | None = None) -> np.ndarray:
    """Central finite-difference Hessian.

    With an explicit ``h`` a single central stencil is used.  By default the
    step is ``eps^(1/6) (1 + |x|)`` and one Richardson extrapolation removes
    the ``O(h^2)`` term.
    """
    x = np.asarray(x, dtype=float)
    f0 = fun(x)
    if h is not None:
        return _fd_hessian_step(fun, x, h, f0)
    h = np.finfo(float).eps ** (1 / 6) * (1.0 + np.linalg.norm(x))
    coarse = _fd_hessian_step(fun, x, h, f0)
    fine = _fd_hessian_step(fun, x, h / 2, f0)
    return (4 * fine - coarse) / 3


def fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = [(np.asarray(fun(x + h * e)) - np.asarray(fun(x - h * e))) / (2 * h) for e in np.eye(x.size)]
    return np.stack(cols, axis=-1)


def _chart_jets(chart, z):
    """AD Jacobian of ``chart`` at ``z`` and the Hessian of ``g∘chart``, or ``None`` if the chart needs floats."""
    try:
        comps = chart(DualTower.seeds(z))
        comps = list(comps)
        if not comps or not all(isinstance(c, DualTower) for c in comps):
            return None
    except (TypeError, ValueError, AttributeError):
        return None
    return comps


def local_chart_hessian_check(g: HomogeneousFn, chart: Callable, z, v,
                              alpha: float, g_hat: float, method: str = "auto") -> float:
    """Relative gap between ``det(H - alpha g_hat I)`` and ``det (g∘chart)''(z) / det(J^T J)``.

    ``chart`` maps ``d-1`` local coordinates onto the unit sphere with
    ``chart(z) = v``.  With ``method="auto"`` the right-hand side is
    differentiated automatically when ``chart`` accepts a list of jets and
    returns a list of components; otherwise (or with ``method="fd"``) finite
    differences are used.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    comps = _chart_jets(chart, z) if method in ("auto", "ad") else None
    if comps is None and method == "ad":
        raise ValueError("chart does not accept jets")
    if comps is not None:
        point = np.array([float(np.asarray(c.value)) for c in comps])
        J = np.stack([np.asarray(c.first) for c in comps])
        outer = g.func(comps)
        second = np.asarray(outer.second)
    else:
        point = np.asarray(chart(z), dtype=float)
        J = fd_jacobian(chart, z)
        second = None
    if np.linalg.norm(point - v) > 1e-7:
        raise ValueError("chart(z) does not reproduce v")
    gram = J.T @ J
    jdet = np.linalg.det(gram)
    if not np.isfinite(jdet) or jdet <= 1e-14 * max(1.0, np.max(np.abs(gram))) ** J.shape[1]:
        raise ValueError("singular chart Jacobian")
    if second is None:
        second = fd_hessian(lambda s: g(chart(s)), z)
    t = tangent_hessian(g, v, alpha, g_hat)
    lhs = np.linalg.det(t.H - alpha * g_hat * np.eye(t.H.shape[0]))
    rhs = np.linalg.det(second) / jdet
    return float(abs(lhs - rhs) / abs(lhs))
