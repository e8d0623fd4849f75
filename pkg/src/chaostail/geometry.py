"""Sphere utilities: hyperspherical coordinates, tangent frames, constants, sampling.

Random streams use numpy's Philox 4x64 counter-based generator.  A stream of
``n`` draws is cut into chunks of :data:`CHUNK` points; chunk ``k`` is drawn
from ``Philox(seed).jumped(k)``, so any chunk can be regenerated on its own
and the concatenated stream does not depend on how chunks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import gammaln

from .exprlang import jet

CHUNK = 1 << 18


@dataclass(frozen=True)
class HypersphericalPoint:
    r: float
    phi: np.ndarray
    singular: bool = False


@dataclass(frozen=True)
class TangentFrame:
    base: np.ndarray
    basis: np.ndarray  # shape (d, d-1); columns span the tangent space

    @property
    def dim(self) -> int:
        return self.base.shape[-1]


def to_cartesian_components(r, phi: list) -> list:
    """Cartesian components from ``(r, phi)``; entries may be jets or arrays."""
    out = []
    prefix = r
    for p in phi:
        out.append(prefix * jet.cos(p))
        prefix = prefix * jet.sin(p)
    out.append(prefix)
    return out


def to_cartesian(r, phi) -> np.ndarray:
    """Map ``(r, phi)`` with ``phi`` of shape ``(..., d-1)`` to a point of shape ``(..., d)``."""
    if isinstance(r, HypersphericalPoint):
        r, phi = r.r, r.phi
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] < 1:
        raise ValueError("need d >= 2")
    comps = to_cartesian_components(np.asarray(r, dtype=float), [phi[..., i] for i in range(phi.shape[-1])])
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def to_hyperspherical(v, tol: float = 1e-12) -> HypersphericalPoint:
    """Inverse of :func:`to_cartesian` for a single point.

    Where a trailing block of coordinates vanishes the remaining angles are
    set to zero and the point is flagged singular, as it is when any of the
    first ``d-2`` angles equals 0 or pi.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    if d < 2:
        raise ValueError("need d >= 2")
    r = float(np.linalg.norm(v))
    phi = np.zeros(d - 1)
    singular = r == 0.0
    if r == 0.0:
        return HypersphericalPoint(0.0, phi, True)
    tails = np.sqrt(np.cumsum((v**2)[::-1])[::-1])  # tails[i] = |v[i:]|
    for i in range(d - 2):
        if tails[i] <= tol * r:
            singular = True
            break
        phi[i] = math.acos(float(np.clip(v[i] / tails[i], -1.0, 1.0)))
        if phi[i] <= tol or math.pi - phi[i] <= tol:
            singular = True
    else:
        if tails[d - 2] <= tol * r:
            singular = True
        else:
            phi[d - 2] = math.atan2(v[d - 1], v[d - 2]) % (2 * math.pi)
    return HypersphericalPoint(r, phi, bool(singular))


def sphere_jacobian(r, phi) -> np.ndarray | float:
    """``det J(r, phi) = r^(d-1) prod_i sin(phi_i)^(d-1-i)`` for ``i <= d-2``."""
    if isinstance(r, HypersphericalPoint):
        r, phi = r.r, r.phi
    phi = np.asarray(phi, dtype=float)
    d = phi.shape[-1] + 1
    out = np.asarray(r, dtype=float) ** (d - 1)
    for i in range(d - 2):
        out = out * np.sin(phi[..., i]) ** (d - 2 - i)
    return float(out) if np.ndim(out) == 0 else out


def cartesian_angle_jacobian(phi) -> np.ndarray:
    """``d v / d phi`` at ``r = 1``, shape ``(d, d-1)``."""
    phi = np.asarray(phi, dtype=float)
    comps = to_cartesian_components(1.0, jet.DualTower.seeds(phi))
    return np.stack([np.asarray(c.first) for c in comps])


def tangent_frame(v) -> TangentFrame:
    """Householder complement of ``v``: deterministic orthonormal basis of ``v``-perp.

    Accepts a single vector or a batch of shape ``(n, d)``; the basis then has
    shape ``(n, d, d-1)``.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("tangent frame of the zero vector")
    v = v / norm
    d = v.shape[-1]
    s = np.where(v[..., :1] >= 0, 1.0, -1.0)
    u = v.copy()
    u[..., :1] += s  # u = v + sign(v1) e1, never small
    beta = 2.0 / np.sum(u * u, axis=-1)
    eye = np.eye(d)
    H = eye - beta[..., None, None] * u[..., :, None] * u[..., None, :]
    return TangentFrame(v, H[..., :, 1:])


def sphere_measure(d: int) -> float:
    """Surface area of the unit sphere in ``R^d``."""
    if d < 1:
        raise ValueError("d >= 1")
    return float(2.0 * math.pi ** (d / 2) / math.gamma(d / 2))


def ball_volume(d: int) -> float:
    """Volume of the unit ball in ``R^d`` (``d = 0`` gives 1)."""
    if d < 0:
        raise ValueError("d >= 0")
    return float(math.exp((d / 2) * math.log(math.pi) - gammaln(d / 2 + 1)))


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed).jumped(index))


def chunk_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def sphere_chunks(d: int, n: int, seed: int, chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """Yield uniform sphere samples chunk by chunk (see module docstring)."""
    for k, size in enumerate(chunk_sizes(n, chunk)):
        yield sphere_chunk(d, size, seed, k)


def sphere_chunk(d: int, size: int, seed: int, index: int) -> np.ndarray:
    z = chunk_generator(seed, index).standard_normal((size, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_sphere(d: int, n: int, seed: int) -> np.ndarray:
    """``n`` uniform points on the unit sphere in ``R^d`` (normalised Gaussians)."""
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    return np.concatenate(list(sphere_chunks(d, n, seed)))


def random_rotation(d: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix with determinant +1."""
    q, r = np.linalg.qr(chunk_generator(seed, 0).standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
