"""Leading-order tail and density asymptotics of Gaussian and elliptical chaos.

Notation: ``g`` is homogeneous of order ``alpha`` on ``R^d``, ``g_hat`` its
maximum on the unit sphere, ``M`` the set of maximizers and ``m`` the
dimension of ``M``.  ``A(v) = H(v)/(alpha g_hat) - I`` is the normalised
tangent Hessian at a maximizer and ``k = d - 1 - m`` its rank.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .exprlang import DualTower, parse_chart_component
from .function import HomogeneousFn, NotC2Error
from .geometry import (
    ball_volume, cartesian_angle_jacobian, random_rotation, sphere_jacobian, sphere_measure,
    tangent_frame, to_hyperspherical,
)
from .hessian import (
    DEGENERATE, NONDEGENERATE_MAX, TangentHessian, angular_hessian, default_rank_tol,
    nondegeneracy_check, tangent_hessian,
)
from .maximize import FINITE, MANIFOLD, MaximizerSet, find_maximizers
from .radial import GaussianChi, GMDAScalingUnavailableError, RadialModel
from .specfun import ChiAlpha

VALIDITY_THRESHOLD = 10.0
MAX_LEVELS = 12
QUAD_RTOL = 1e-6


# -- errors ---------------------------------------------------------------------
class DegenerateHessianError(ValueError):
    """A maximizer where ``A`` is singular, so the leading constant is undefined."""

    def __init__(self, message: str, point=None, eigenvalues=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float).tolist()
        self.eigenvalues = None if eigenvalues is None else np.asarray(eigenvalues, dtype=float).tolist()


class ChartRequiredError(DegenerateHessianError):
    """Maximizers form a manifold but no chart was supplied to integrate over it."""

    def __init__(self, message: str, point=None, eigenvalues=None, g_hat=None, m=None):
        super().__init__(message, point, eigenvalues)
        self.g_hat = g_hat
        self.m = m


class RankViolationError(DegenerateHessianError):
    pass


class ChartError(ValueError):
    pass


class OverlappingChartsError(ChartError):
    pass


class QuadratureError(RuntimeError):
    pass


class HigherOrderNotImplementedError(NotImplementedError):
    def __init__(self, order: int):
        super().__init__(f"not implemented: order {order} requested; higher-order coefficients "
                         "are only known to exist, no closed form is available")


class ZeroAngularDensityError(ValueError):
    pass


# -- whitening --------------------------------------------------------------------
def whiten(h: HomogeneousFn, B) -> HomogeneousFn:
    """``g(u) = h(sqrt(B) u)``; a singular ``B`` reduces ``g`` to the range of ``B``."""
    B = np.asarray(B, dtype=float)
    d = h.dim
    if B.shape != (d, d):
        raise ValueError(f"covariance must be {d}x{d}")
    scale = max(float(np.linalg.norm(B)), 1e-300)
    if np.linalg.norm(B - B.T) > 1e-10 * scale:
        raise ValueError("covariance matrix is not symmetric")
    lam, Q = np.linalg.eigh(0.5 * (B + B.T))
    tr = float(np.trace(B))
    tiny = 1e-12 * tr
    if np.any(lam < -tiny):
        raise ValueError(f"covariance has a negative eigenvalue {lam.min():.3g}")
    keep = lam > tiny
    if keep.all():
        root = (Q * np.sqrt(lam)) @ Q.T
        return h.compose_linear(0.5 * (root + root.T), name=f"{h.name}∘sqrtB")
    if not keep.any():
        raise ValueError("covariance matrix is zero")
    Qr = Q[:, keep]
    # fix eigenvector signs so the reduction is deterministic
    flip = np.sign(Qr[np.argmax(np.abs(Qr), axis=0), np.arange(Qr.shape[1])])
    L = Qr * flip * np.sqrt(lam[keep])
    return h.compose_linear(L, name=f"{h.name}∘L*")


# -- charts -------------------------------------------------------------------------
@dataclass(frozen=True)
class Chart:
    """Map from ``[0,1]^m`` onto part of the maximizer manifold in ``S^(d-1)``.

    ``func`` receives ``m`` components (floats, arrays or jets) and returns
    ``d`` components.
    """

    func: Callable[[list], list]
    dim: int
    ambient_dim: int
    name: str = "chart"
    source: dict | None = field(default=None, compare=False)

    def map(self, s) -> np.ndarray:
        s = np.atleast_2d(np.asarray(s, dtype=float))
        comps = self.func([s[:, i] for i in range(self.dim)])
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), s.shape[:1]) for c in comps], axis=1)

    def __call__(self, s) -> np.ndarray:
        return self.map(s)[0] if np.ndim(s) == 1 else self.map(s)

    def jacobian(self, s) -> np.ndarray:
        """``dv/ds`` with shape ``(n, d, m)``."""
        s = np.atleast_2d(np.asarray(s, dtype=float))
        comps = self.func(DualTower.seeds(s))
        cols = []
        for c in comps:
            if isinstance(c, DualTower):
                cols.append(np.broadcast_to(c.first, (s.shape[0], self.dim)))
            else:
                cols.append(np.zeros((s.shape[0], self.dim)))
        return np.stack(cols, axis=1)

    def volume_element(self, s) -> np.ndarray:
        J = self.jacobian(s)
        return np.sqrt(np.abs(np.linalg.det(np.swapaxes(J, 1, 2) @ J)))

    @classmethod
    def from_dict(cls, data: dict) -> "Chart":
        try:
            m = int(data["dim"])
            d = int(data["ambient_dim"])
            sources = list(data["map"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ChartError(f"chart needs 'dim', 'ambient_dim' and 'map': {exc}") from exc
        if len(sources) != d:
            raise ChartError(f"chart map has {len(sources)} components, ambient_dim is {d}")
        exprs = [parse_chart_component(src, m) for src in sources]

        def func(args, exprs=exprs):
            return [e.evaluate(args) for e in exprs]

        return cls(func, m, d, data.get("name", "chart"), dict(data))


def load_charts(source) -> list[Chart]:
    """Read a chart (or an atlas under ``"charts"``) from a JSON file, string or dict."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        data = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        data = json.loads(source)
    else:
        data = source
    if isinstance(data, dict) and "charts" in data:
        return [Chart.from_dict(c) for c in data["charts"]]
    if isinstance(data, list):
        return [Chart.from_dict(c) for c in data]
    return [Chart.from_dict(data)]


def sphere_chart(indices: Sequence[int], d: int, name: str = "sphere") -> Chart:
    """Unit sphere of the coordinate subspace spanned by ``indices`` (1 to 4 coordinates)."""
    idx = list(indices)
    k = len(idx)
    if not 2 <= k <= 4:
        raise ValueError("sphere charts are provided for subspheres of dimension 1 to 3")
    from .exprlang import jet

    def func(s):
        angles = [math.pi * si for si in s[:-1]] + [2 * math.pi * s[-1]]
        comps = []
        prefix = 1.0
        for a in angles:
            comps.append(prefix * jet.cos(a))
            prefix = prefix * jet.sin(a)
        comps.append(prefix)
        zero = s[0] * 0.0
        out = [zero] * d
        for i, c in zip(idx, comps):
            out[i] = c
        return out

    return Chart(func, k - 1, d, name)


def _gl_grid(n: int, m: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * m), indexing="ij")
    weights = np.meshgrid(*([w] * m), indexing="ij")
    nodes = np.stack([gr.ravel() for gr in grids], axis=1)
    wts = np.prod(np.stack([wt.ravel() for wt in weights], axis=1), axis=1)
    return nodes, wts


def _nearest_preimage(chart: Chart, p, n_grid: int = 24, exclude=None, exclude_radius=0.05):
    """Approximate ``s`` in ``(0,1)^m`` minimising ``|chart(s) - p|`` (grid search then Gauss-Newton)."""
    nodes, _ = _gl_grid(n_grid, chart.dim)
    img = chart.map(nodes)
    dist = np.linalg.norm(img - p, axis=1)
    if exclude is not None:
        dist = np.where(np.linalg.norm(nodes - exclude, axis=1) < exclude_radius, np.inf, dist)
    if not np.isfinite(dist).any():
        return None, np.inf
    s = nodes[int(np.argmin(dist))].copy()
    for _ in range(30):
        r = chart.map(s)[0] - p
        J = chart.jacobian(s)[0]
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        s = np.clip(s + step, 0.0, 1.0)
        if np.linalg.norm(step) < 1e-14:
            break
    return s, float(np.linalg.norm(chart.map(s)[0] - p))


def check_atlas(charts: Sequence[Chart], probes: int = 5, margin: float = 1e-3) -> None:
    """Reject atlases whose charts overlap (or fold onto themselves) on an open set."""
    for i, ci in enumerate(charts):
        x, _ = _gl_grid(probes, ci.dim)
        pts = ci.map(x)
        for j, cj in enumerate(charts):
            for s0, p in zip(x, pts):
                s, dist = _nearest_preimage(cj, p, exclude=s0 if i == j else None)
                if s is None or dist > 1e-8:
                    continue
                if np.all(s > margin) and np.all(s < 1 - margin):
                    if i == j and np.linalg.norm(s - s0) < 1e-4:
                        continue
                    raise OverlappingChartsError(
                        f"charts '{ci.name}' and '{cj.name}' overlap near {np.round(p, 6).tolist()}; "
                        "supply a measurable partition")


def check_chart_covers(charts: Sequence[Chart], cloud, tol: float = 1e-6) -> None:
    """Every cloud point must lie on the image of some chart."""
    for p in np.asarray(cloud):
        if min(_nearest_preimage(c, p)[1] for c in charts) > tol:
            raise ChartError(f"maximizer {np.round(p, 8).tolist()} is not covered by the supplied chart(s)")


# -- integrands -----------------------------------------------------------------------
def _batch_tangent_A(g: HomogeneousFn, V, alpha: float, g_hat: float):
    t = g.jet(V)
    if t.nonsmooth:
        raise NotC2Error("g not C² at maximizer")
    U = tangent_frame(V).basis
    H = np.einsum("nia,nij,njb->nab", U, np.asarray(t.second), U)
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    A = H / (alpha * g_hat) - np.eye(V.shape[1] - 1)
    return np.asarray(t.value, dtype=float).reshape(len(V)), np.linalg.eigvalsh(A)


def _pdet_rows(eig, k: int, what: str, points):
    """Product of the ``k`` nonzero values in each row; raise if the rank differs."""
    rho = np.max(np.abs(eig), axis=1, keepdims=True) if eig.shape[1] else np.zeros((len(eig), 1))
    tol = np.maximum(1e-6 * rho, 1e-12)
    nonzero = np.abs(eig) > tol
    rank = nonzero.sum(axis=1)
    bad = np.flatnonzero(rank != k)
    if bad.size:
        b = bad[0]
        raise RankViolationError(
            f"{what}: rank {rank[b]} at node {np.round(points[b], 8).tolist()}, expected {k}",
            points[b], eig[b])
    return np.prod(np.where(nonzero, eig, 1.0), axis=1)


def _chart_nodes_check(chart: Chart, V, vals, g_hat):
    if np.max(np.abs(np.linalg.norm(V, axis=1) - 1.0)) > 1e-9:
        raise ChartError(f"chart '{chart.name}' leaves the unit sphere")
    if np.max(np.abs(vals - g_hat)) > 1e-6 * (1.0 + abs(g_hat)):
        raise ChartError(f"chart '{chart.name}' leaves the maximizer set (g differs from g_hat by "
                         f"{np.max(np.abs(vals - g_hat)):.3g})")


def _integrate(chart_integrand, m: int, n0: int = 8):
    """Gauss-Legendre tensor quadrature on ``[0,1]^m`` with node doubling."""
    n = n0
    prev = None
    for _ in range(MAX_LEVELS):
        nodes, wts = _gl_grid(n, m)
        val = float(np.sum(wts * chart_integrand(nodes)))
        if prev is not None and abs(val - prev) <= QUAD_RTOL * abs(val):
            return val, n
        prev = val
        n *= 2
        if n**m > 4_000_000:
            break
    raise QuadratureError(f"quadrature did not converge after refinement to {n // 2} nodes per axis")


def manifold_integral(g: HomogeneousFn, charts: Sequence[Chart], alpha: float, g_hat: float, m: int,
                      weight: Callable[[np.ndarray], np.ndarray] | None = None,
                      quad_points: int = 8) -> float:
    """``sum over charts of int |pdet A(v)|^(-1/2) weight(v) dV`` in Cartesian form."""
    k = g.dim - 1 - m

    def integrand_for(chart):
        def f(s):
            V = chart.map(s)
            vals, eig = _batch_tangent_A(g, V, alpha, g_hat)
            _chart_nodes_check(chart, V, vals, g_hat)
            pdet = _pdet_rows(eig, k, "rank violation", V)
            out = np.abs(pdet) ** -0.5 * chart.volume_element(s)
            return out * weight(V) if weight is not None else out
        return f

    total = 0.0
    for chart in charts:
        if chart.dim != m or chart.ambient_dim != g.dim:
            raise ChartError(f"chart '{chart.name}' has dimension {chart.dim}->{chart.ambient_dim}, "
                             f"expected {m}->{g.dim}")
        total += _integrate(integrand_for(chart), m, quad_points)[0]
    return total


def finite_sum(hessians: Sequence[TangentHessian], weights=None) -> float:
    """``sum_j w_j |det A_j|^(-1/2)``; degenerate points raise."""
    total = 0.0
    for j, t in enumerate(hessians):
        status = nondegeneracy_check(t)
        if status != NONDEGENERATE_MAX:
            raise DegenerateHessianError(
                f"{'degenerate Hessian' if status == DEGENERATE else 'not a maximum'} at "
                f"{np.round(t.base, 10).tolist()}", t.base, t.eigenvalues)
        det = float(np.prod(t.eigenvalues)) if t.eigenvalues.size else 1.0
        w = 1.0 if weights is None else float(weights[j])
        total += w * abs(det) ** -0.5
    return total


# -- h0 ----------------------------------------------------------------------------------
def h0_finite(points, hessians: Sequence[TangentHessian], alpha: float, g_hat: float) -> float:
    """``(2 pi)^(-1/2) sum_j |det A(v_j)|^(-1/2)`` over isolated maximizers."""
    if len(hessians) != len(points):
        raise ValueError("one Hessian per maximizer is required")
    return finite_sum(hessians) / math.sqrt(2 * math.pi)


def h0_manifold(charts, g: HomogeneousFn, alpha: float, g_hat: float, m: int,
                quad_points: int = 8) -> float:
    """``(2 pi)^(-(m+1)/2) int_M |pdet A|^(-1/2) dV`` over a chart or atlas."""
    charts = [charts] if isinstance(charts, Chart) else list(charts)
    if m == g.dim - 1 and not charts:
        return sphere_measure(g.dim) / (2 * math.pi) ** (g.dim / 2)
    return manifold_integral(g, charts, alpha, g_hat, m, quad_points=quad_points) / (2 * math.pi) ** ((m + 1) / 2)


def _rotation_for(points_fn, d: int, margin: float = 1e-3, max_tries: int = 50):
    """First fixed rotation (seed 0 = identity) keeping all probe points off coordinate singularities."""
    for seed in range(max_tries):
        R = np.eye(d) if seed == 0 else random_rotation(d, seed)
        ok = True
        for v in points_fn(R):
            p = to_hyperspherical(v)
            if p.singular or (d > 2 and np.min(np.sin(p.phi[: d - 2])) < margin):
                ok = False
                break
        if ok:
            return R
    raise RuntimeError("could not find a rotation avoiding coordinate singularities")


def _hyperspherical_terms(g: HomogeneousFn, V, R):
    """``|det J(1,phi)|`` and angular Hessians after rotating ``g`` and the points by ``R``."""
    g_rot = g.compose_linear(R.T)
    out = []
    for v in V:
        p = to_hyperspherical(R @ v)
        out.append((p.phi, abs(sphere_jacobian(1.0, p.phi)), angular_hessian(g_rot, p.phi)))
    return out


def h0_finite_hyperspherical(g: HomogeneousFn, points, alpha: float, g_hat: float) -> float:
    """Hyperspherical form ``(alpha g_hat)^((d-1)/2) (2 pi)^(-1/2) sum |det J(1,phi_j)| / sqrt|det g''(phi_j)|``."""
    V = np.atleast_2d(np.asarray(points, dtype=float))
    d = V.shape[1]
    R = _rotation_for(lambda R: V @ R.T, d)
    total = 0.0
    for _, jac, G in _hyperspherical_terms(g, V, R):
        total += jac / math.sqrt(abs(np.linalg.det(G)))
    return (alpha * g_hat) ** ((d - 1) / 2) * total / math.sqrt(2 * math.pi)


def _angular_manifold_integrand(g, chart: Chart, R, alpha, g_hat, m, s, weight=None):
    d = g.dim
    k = d - 1 - m
    V = chart.map(s)
    Jc = chart.jacobian(s)
    g_rot = g.compose_linear(R.T)
    phis, jacs, dvs = [], [], []
    for v, J in zip(V, Jc):
        p = to_hyperspherical(R @ v)
        if p.singular:
            raise ChartError("quadrature node at a coordinate singularity")
        D = cartesian_angle_jacobian(p.phi)  # (d, d-1)
        dphi = np.linalg.pinv(D) @ (R @ J)  # (d-1, m)
        phis.append(p.phi)
        jacs.append(abs(sphere_jacobian(1.0, p.phi)))
        dvs.append(math.sqrt(abs(np.linalg.det(dphi.T @ dphi))))
    phis = np.array(phis)
    t = g_rot.func([c for c in _angular_components(phis)])
    if t.nonsmooth:
        raise NotC2Error("g not C² at maximizer")
    G = np.asarray(t.second)
    eig = np.linalg.eigvalsh(0.5 * (G + np.swapaxes(G, 1, 2)))
    pdet = _pdet_rows(eig, k, "rank violation (angular Hessian)", V)
    out = np.array(jacs) / np.sqrt(np.abs(pdet)) * np.array(dvs)
    return out * weight(V) if weight is not None else out


def _angular_components(phis):
    from .geometry import to_cartesian_components
    return to_cartesian_components(1.0, DualTower.seeds(phis))


def h0_manifold_hyperspherical(charts, g: HomogeneousFn, alpha: float, g_hat: float, m: int,
                               quad_points: int = 8) -> float:
    """Hyperspherical manifold form ``(2pi)^(-(m+1)/2) (alpha g_hat)^(k/2) int |det J| / sqrt|pdet g''(phi)| dV_phi``."""
    charts = [charts] if isinstance(charts, Chart) else list(charts)
    k = g.dim - 1 - m
    total = 0.0
    for chart in charts:
        probe, _ = _gl_grid(quad_points, m)
        R = _rotation_for(lambda R: chart.map(probe) @ R.T, g.dim)
        total += _integrate(lambda s: _angular_manifold_integrand(g, chart, R, alpha, g_hat, m, s),
                            m, quad_points)[0]
    return (alpha * g_hat) ** (k / 2) * total / (2 * math.pi) ** ((m + 1) / 2)


# -- results and evaluators ------------------------------------------------------------------
@dataclass(frozen=True)
class AsymptoticResult:
    alpha: float
    g_hat: float
    m: int
    h0: float
    d: int
    form: str = "gaussian_tail"  # gaussian_tail | gaussian_density | polar_tail
    model: RadialModel | None = None

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")

    @property
    def k(self) -> int:
        return self.d - 1 - self.m

    def pre_asymptotic(self, x) -> np.ndarray | bool:
        z = (np.asarray(x, dtype=float) / self.g_hat) ** (2.0 / self.alpha)
        out = z < VALIDITY_THRESHOLD
        return bool(out) if np.ndim(out) == 0 else out


def _check_order(order: int):
    if order != 0:
        raise HigherOrderNotImplementedError(order)


def log_tail_leading(res: AsymptoticResult, x, order: int = 0):
    _check_order(order)
    z = np.asarray(x, dtype=float) / res.g_hat
    out = (res.m - 1) / res.alpha * np.log(z) - z ** (2 / res.alpha) / 2 + math.log(res.h0)
    return float(out) if np.ndim(out) == 0 else out


def tail_leading(res: AsymptoticResult, x, order: int = 0):
    """``(x/g_hat)^((m-1)/alpha) exp(-(x/g_hat)^(2/alpha)/2) h0`` and a validity flag.

    The flag is True where ``(x/g_hat)^(2/alpha) >= 10``.
    """
    val = np.exp(log_tail_leading(res, x, order))
    valid = ~np.asarray(res.pre_asymptotic(x))
    return (float(val), bool(valid)) if np.ndim(val) == 0 else (val, valid)


def log_density_leading(res: AsymptoticResult, x, order: int = 0):
    _check_order(order)
    z = np.asarray(x, dtype=float) / res.g_hat
    out = ((res.m + 1) / res.alpha - 1) * np.log(z) - z ** (2 / res.alpha) / 2 \
        + math.log(res.h0 / (res.alpha * res.g_hat))
    return float(out) if np.ndim(out) == 0 else out


def density_leading(res: AsymptoticResult, x, order: int = 0):
    """``(x/g_hat)^((m+1)/alpha - 1) exp(-(x/g_hat)^(2/alpha)/2) h0/(alpha g_hat)`` and a validity flag."""
    val = np.exp(log_density_leading(res, x, order))
    valid = ~np.asarray(res.pre_asymptotic(x))
    return (float(val), bool(valid)) if np.ndim(val) == 0 else (val, valid)


# -- polar (elliptical) chaos ----------------------------------------------------------------
def uniform_density(d: int) -> Callable[[np.ndarray], np.ndarray]:
    c = 1.0 / sphere_measure(d)
    return lambda V: np.full(np.atleast_2d(V).shape[0], c)


def h0_polar(g: HomogeneousFn, maxset: MaximizerSet, alpha: float, g_hat: float,
             angular_density=None, charts=None, hessians=None, quad_points: int = 8) -> float:
    """Leading constant of the polar tail.

    ``angular_density`` is the density of the direction with respect to the
    surface measure of the sphere (uniform if omitted).  The value equals
    ``(2 pi g_hat / alpha)^(k/2) int_M q(v) |pdet A(v)|^(-1/2) dV``.
    """
    d = g.dim
    q = angular_density or uniform_density(d)
    if maxset.kind == FINITE:
        V = maxset.points
        weights = np.asarray(q(V), dtype=float)
        if np.any(weights <= 0):
            raise ZeroAngularDensityError("angular density vanishes at a maximizer")
        hessians = hessians or [tangent_hessian(g, v, alpha, g_hat) for v in V]
        integral = finite_sum(hessians, weights)
        m = 0
    else:
        m = maxset.m
        charts = charts if charts is not None else maxset.chart
        if charts is None:
            if m != d - 1:
                raise ChartRequiredError(f"maximizers form a {m}-dimensional manifold; a chart is required")
            integral = float(np.mean(q(maxset.points))) * sphere_measure(d)
        else:
            charts = [charts] if isinstance(charts, Chart) else list(charts)

            def guarded(V):
                w = np.asarray(q(V), dtype=float)
                if np.any(w <= 0):
                    raise ZeroAngularDensityError("angular density vanishes on the maximizer set")
                return w

            integral = manifold_integral(g, charts, alpha, g_hat, m, weight=guarded, quad_points=quad_points)
    k = d - 1 - m
    return (2 * math.pi * g_hat / alpha) ** (k / 2) * integral


def h0_polar_hyperspherical(g: HomogeneousFn, points, alpha: float, g_hat: float,
                            angular_density=None) -> float:
    """Finite-``M`` polar constant from angle Hessians: ``(2 pi g_hat^2)^(k/2) sum p_nu(phi_j)/sqrt|det g''(phi_j)|``.

    Here ``p_nu(phi) = q(v) |det J(1, phi)|`` is the density of the angles.
    """
    V = np.atleast_2d(np.asarray(points, dtype=float))
    d = V.shape[1]
    q = angular_density or uniform_density(d)
    R = _rotation_for(lambda R: V @ R.T, d)
    total = 0.0
    for v, (_, jac, G) in zip(V, _hyperspherical_terms(g, V, R)):
        p_nu = float(np.asarray(q(v[None]))[0]) * jac
        total += p_nu / math.sqrt(abs(np.linalg.det(G)))
    return (2 * math.pi * g_hat**2) ** ((d - 1) / 2) * total


def log_polar_tail_leading(res: AsymptoticResult, x):
    if res.model is None:
        raise GMDAScalingUnavailableError("missing radial model")
    y = np.asarray(x, dtype=float) / res.g_hat
    w = res.model.scaling(y)
    out = math.log(res.h0) - res.k / 2 * np.log(np.asarray(x, dtype=float) * w) + res.model.log_tail(y)
    return float(out) if np.ndim(out) == 0 else out


def polar_tail_leading(res: AsymptoticResult, x):
    """``h0 / (x w(x/g_hat))^(k/2) P{R > x/g_hat}`` for the radial model of ``res``."""
    out = np.exp(log_polar_tail_leading(res, x))
    return float(out) if np.ndim(out) == 0 else out


# -- near-maximum law and bound --------------------------------------------------------------
def g0_near_max(g: HomogeneousFn, maxset: MaximizerSet, alpha: float, g_hat: float,
                hessians=None, charts=None, quad_points: int = 8) -> float:
    """Constant ``g0`` with ``P{g(zeta) > g_hat - t} ~ g0 t^(k/2)`` for uniform ``zeta``."""
    d = g.dim
    if maxset.kind == FINITE:
        hessians = hessians or [tangent_hessian(g, v, alpha, g_hat) for v in maxset.points]
        integral = finite_sum(hessians)
        m = 0
    else:
        m = maxset.m
        charts = charts if charts is not None else maxset.chart
        if charts is None:
            raise ChartRequiredError(f"maximizers form a {m}-dimensional manifold; a chart is required")
        charts = [charts] if isinstance(charts, Chart) else list(charts)
        integral = manifold_integral(g, charts, alpha, g_hat, m, quad_points=quad_points)
    k = d - 1 - m
    return 2 ** (k / 2) * ball_volume(k) / sphere_measure(d) * (alpha * g_hat) ** (-k / 2) * integral


def upper_bound(h_hat: float, d: int, alpha: float, x):
    """``P{chi^alpha > x / h_hat}``, which dominates ``P{h(xi) > x}``."""
    return ChiAlpha(d, alpha).tail(np.asarray(x, dtype=float) / h_hat)


def log_upper_bound(h_hat: float, d: int, alpha: float, x):
    return ChiAlpha(d, alpha).log_tail(np.asarray(x, dtype=float) / h_hat)


# -- pipeline ----------------------------------------------------------------------------------
@dataclass(frozen=True)
class Analysis:
    g: HomogeneousFn
    maxset: MaximizerSet
    hessians: tuple
    result: AsymptoticResult
    charts: tuple = ()

    def tail(self, x):
        return tail_leading(self.result, x)

    def density(self, x):
        return density_leading(self.result, x)


def _analyze_line(g: HomogeneousFn) -> Analysis:
    vals = g.batch(np.array([[1.0], [-1.0]]))
    g_hat = float(np.max(vals))
    from .maximize import NoPositiveMaximumError
    if not g_hat > 0:
        raise NoPositiveMaximumError(g_hat)
    pts = np.array([[1.0], [-1.0]])[np.abs(vals - g_hat) <= 1e-12 * (1 + g_hat)]
    maxset = MaximizerSet(g_hat, FINITE, pts, 0, None, "one-dimensional: S^0 = {-1, 1}")
    res = AsymptoticResult(g.alpha, g_hat, 0, len(pts) / math.sqrt(2 * math.pi), 1)
    return Analysis(g, maxset, (), res)


def analyze(g: HomogeneousFn, B=None, charts=None, starts: int | None = None, seed: int = 0,
            tol: float = 1e-10, quad_points: int = 8) -> Analysis:
    """Whiten, locate maximizers, classify them and compute ``h0``."""
    if B is not None:
        g = whiten(g, B)
    alpha = g.alpha
    if g.dim == 1:
        return _analyze_line(g)
    maxset = find_maximizers(g, starts=starts, seed=seed, tol=tol)
    g_hat = maxset.g_hat
    charts = [] if charts is None else ([charts] if isinstance(charts, Chart) else list(charts))
    if maxset.kind == MANIFOLD:
        m = maxset.m
        if m == g.dim - 1 and not charts:
            h0 = h0_manifold([], g, alpha, g_hat, m)
        else:
            if not charts:
                t = tangent_hessian(g, maxset.points[0], alpha, g_hat)
                raise ChartRequiredError(
                    f"degenerate Hessian: maximizers form a manifold of dimension {m}; "
                    "supply a chart to integrate over it", maxset.points[0], t.eigenvalues, g_hat, m)
            for c in charts:
                if c.dim != m:
                    raise ChartError(f"chart dimension {c.dim} differs from detected manifold dimension {m}")
            check_atlas(charts)
            check_chart_covers(charts, maxset.points)
            h0 = h0_manifold(charts, g, alpha, g_hat, m, quad_points)
        maxset = maxset.with_chart(tuple(charts) or None)
        res = AsymptoticResult(alpha, g_hat, m, h0, g.dim)
        return Analysis(g, maxset, (), res, tuple(charts))
    if charts:
        raise ChartError("a chart was supplied but the maximizers are isolated points")
    hessians = tuple(tangent_hessian(g, v, alpha, g_hat) for v in maxset.points)
    h0 = h0_finite(maxset.points, hessians, alpha, g_hat)
    return Analysis(g, maxset, hessians, AsymptoticResult(alpha, g_hat, 0, h0, g.dim))


def polar_analysis(a: Analysis, model: RadialModel, angular_density=None) -> AsymptoticResult:
    """Polar-chaos result for the maximizers found by :func:`analyze`."""
    g = a.g
    maxset = a.maxset
    if maxset.kind == MANIFOLD and a.charts:
        h0 = h0_polar(g, maxset, g.alpha, maxset.g_hat, angular_density, charts=list(a.charts))
    else:
        h0 = h0_polar(g, maxset, g.alpha, maxset.g_hat, angular_density, hessians=list(a.hessians) or None)
    return AsymptoticResult(g.alpha, maxset.g_hat, a.result.m, h0, g.dim, "polar_tail", model)


def gaussian_model(a: Analysis) -> GaussianChi:
    return GaussianChi(a.g.dim, a.g.alpha)
