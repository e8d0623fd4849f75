"""Locating the maximizer set of a homogeneous function on the unit sphere."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .function import HomogeneousFn
from .geometry import sample_sphere, tangent_frame
from .hessian import NotMaximumError, detect_manifold_dim

CLUSTER_RADIUS = 1e-4
FINITE = "finite"
MANIFOLD = "manifold"


class NoPositiveMaximumError(ValueError):
    def __init__(self, g_max: float):
        self.g_max = g_max
        super().__init__(f"g not positive anywhere (largest value found {g_max:.6g})")


@dataclass(frozen=True)
class MaximizerSet:
    """``g_hat`` and either finitely many maximizers or a cloud sampled from a manifold.

    For the manifold kind ``points`` is the cloud of distinct converged
    iterates and ``m`` the detected dimension; integrating over it needs a
    chart supplied separately.
    """

    g_hat: float
    kind: str
    points: np.ndarray
    m: int = 0
    chart: object | None = None
    multiplicity_notes: str = ""
    starts: int = 0
    seed: int = 0
    tol: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_chart(self, chart) -> "MaximizerSet":
        return MaximizerSet(self.g_hat, MANIFOLD, self.points, self.m, chart,
                            self.multiplicity_notes, self.starts, self.seed, self.tol, self.extra)


def default_starts(d: int) -> int:
    return max(200, 50 * d)


def _normalize(V):
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _value_grad(g: HomogeneousFn, V):
    t = g.jet(V)
    return np.asarray(t.value, dtype=float).reshape(len(V)), np.asarray(t.first)


def _projected_ascent(g, V, iters: int, gtol: float):
    f, G = _value_grad(g, V)
    for _ in range(iters):
        P = G - np.sum(G * V, axis=1, keepdims=True) * V
        pn2 = np.sum(P * P, axis=1)
        active = np.sqrt(pn2) > gtol * (1.0 + np.abs(f))
        if not active.any():
            break
        step = np.where(active, 1.0, 0.0)
        todo = active.copy()
        newV, newf = V.copy(), f.copy()
        for _ in range(40):
            idx = np.flatnonzero(todo)
            if idx.size == 0:
                break
            cand = _normalize(V[idx] + step[idx, None] * P[idx])
            fc = g.batch(cand)
            ok = fc >= f[idx] + 1e-4 * step[idx] * pn2[idx]
            newV[idx[ok]], newf[idx[ok]] = cand[ok], fc[ok]
            todo[idx[ok]] = False
            step[idx[~ok]] *= 0.5
        V = newV
        f, G = _value_grad(g, V)
    return V


def _newton_polish(g, V, iters: int, tol: float, radius: float = 0.1):
    """Riemannian Newton with absolute-eigenvalue flooring and a step cap."""
    n, d = V.shape
    done = np.zeros(n, dtype=bool)
    for _ in range(iters):
        t = g.jet(V)
        f = np.asarray(t.value, dtype=float).reshape(n)
        G, Hs = np.asarray(t.first), np.asarray(t.second)
        U = tangent_frame(V).basis  # (n, d, d-1)
        gt = np.einsum("nij,ni->nj", U, G)
        gnorm = np.linalg.norm(gt, axis=1)
        done = gnorm <= tol * (1.0 + np.abs(f))
        if done.all():
            break
        radial = np.sum(G * V, axis=1)
        Hr = np.einsum("nia,nij,njb->nab", U, Hs, U) - radial[:, None, None] * np.eye(d - 1)
        lam, Q = np.linalg.eigh(0.5 * (Hr + np.swapaxes(Hr, 1, 2)))
        floor = 1e-8 * (1.0 + np.max(np.abs(lam), axis=1, keepdims=True))
        inv = 1.0 / np.maximum(np.abs(lam), floor)
        delta = np.einsum("nab,nb,ncb,nc->na", Q, inv, Q, gt)
        dn = np.linalg.norm(delta, axis=1, keepdims=True)
        delta = np.where(dn > radius, delta * radius / np.maximum(dn, 1e-300), delta)
        step = np.einsum("nij,nj->ni", U, delta)
        for _ in range(30):
            cand = _normalize(V + step)
            fc = g.batch(cand)
            ok = (fc >= f - 1e-15 * (1.0 + np.abs(f))) | done
            if ok.all():
                break
            step[~ok] *= 0.5
        V = np.where((ok & ~done)[:, None], cand, V)
    return V


def _cluster(points, radius: float):
    order = np.lexsort(points.T[::-1])
    reps: list[np.ndarray] = []
    counts: list[int] = []
    for p in points[order]:
        for k, r in enumerate(reps):
            if np.linalg.norm(p - r) <= radius:
                counts[k] += 1
                break
        else:
            reps.append(p)
            counts.append(1)
    return np.array(reps), counts


def find_maximizers(g: HomogeneousFn, starts: int | None = None, seed: int = 0,
                    tol: float = 1e-10, ascent_iters: int = 300,
                    newton_iters: int = 60) -> MaximizerSet:
    """Multi-start maximization of ``g`` over the unit sphere.

    Starts are uniform on the sphere; each runs Armijo projected-gradient
    ascent and then a tangent-space Newton polish.  Converged points within
    ``1e-4`` of each other are merged.  If the maximizers are numerous and
    the Hessian at the best one has a null space, a manifold is reported.
    """
    d = g.dim
    if d < 2:
        raise ValueError("maximization on the sphere needs d >= 2")
    starts = default_starts(d) if starts is None else int(starts)
    if starts < max(50, 10 * d):
        raise ValueError(f"need at least {max(50, 10 * d)} starts for d={d}")
    V = sample_sphere(d, starts, seed)
    V = _projected_ascent(g, V, ascent_iters, 1e-5)
    V = _newton_polish(g, V, newton_iters, tol)
    with np.errstate(all="ignore"):
        f = g.batch(V)
    f = np.where(np.isfinite(f), f, -np.inf)
    g_hat = float(np.max(f))
    if not g_hat > 0:
        raise NoPositiveMaximumError(g_hat)
    keep = f >= g_hat - 1e-8 * (1.0 + g_hat)
    reps, counts = _cluster(V[keep], CLUSTER_RADIUS)
    best = reps[int(np.argmax(g.batch(reps)))]
    notes = f"{int(keep.sum())} of {starts} starts reached the maximum; {len(reps)} clusters"
    try:
        m = detect_manifold_dim(g, best, g.alpha, g_hat)
    except NotMaximumError as exc:
        notes += f"; rank detection failed: {exc}"
        m = 0
    except ArithmeticError as exc:  # nonsmooth at the maximizer
        notes += f"; rank detection skipped: {exc}"
        m = 0
    extra = {"cluster_sizes": counts}
    if m >= 1 and len(reps) >= max(10, starts // 10):
        return MaximizerSet(g_hat, MANIFOLD, reps, m, None,
                            notes + f"; detected manifold of dimension {m}", starts, seed, tol, extra)
    if m >= 1:
        notes += f"; A has nullity {m} but too few clusters for a manifold"
    return MaximizerSet(g_hat, FINITE, reps, 0, None, notes, starts, seed, tol, extra)
