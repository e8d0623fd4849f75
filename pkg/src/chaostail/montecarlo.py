"""Monte Carlo estimators built on the polar factorisation ``eta = chi * zeta``.

Conditioning on the direction ``zeta`` leaves an exact chi-square tail, so
``P{g(eta) > x}`` is the mean over uniform ``zeta`` of
``Q(d/2, (x/g(zeta))^(2/alpha)/2)``.  Per-sample weights are handled in log
space and reduced with a streaming log-sum-exp over fixed-size chunks; chunk
``k`` always uses the substream ``Philox(seed).jumped(k)`` and chunks are
merged in index order, so results do not depend on the worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .function import HomogeneousFn
from .geometry import CHUNK, chunk_generator, chunk_sizes, sphere_chunk
from .specfun import log_chisq_excess_moment, log_upper_reg_gamma


@dataclass(frozen=True)
class MCEstimate:
    estimator: str
    x: float
    mean: float
    log_mean: float
    std_error: float
    log_std_error: float
    n: int
    seed: int
    threads: int = 1
    chunk: int = CHUNK

    @property
    def rel_error(self) -> float:
        return math.exp(self.log_std_error - self.log_mean) if self.log_mean > -math.inf else math.inf

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        rec = {k: self.to_dict()[k] for k in ("estimator", "x", "mean", "log_mean", "std_error", "n", "seed")}
        return json.dumps(rec)


@dataclass
class LogSumExp:
    """Streaming sums of ``exp(w)`` and ``exp(2w)`` stored relative to a running maximum."""

    peak: float = -math.inf
    s1: float = 0.0
    s2: float = 0.0
    count: int = 0

    def add(self, logw: np.ndarray) -> "LogSumExp":
        logw = np.asarray(logw, dtype=float)
        self.count += logw.size
        if logw.size == 0:
            return self
        top = float(np.max(logw))
        if top == -math.inf:
            return self
        if top > self.peak:
            scale = math.exp(self.peak - top) if self.peak > -math.inf else 0.0
            self.s1 *= scale
            self.s2 *= scale * scale
            self.peak = top
        e = np.exp(logw - self.peak)
        self.s1 += float(np.sum(e))
        self.s2 += float(np.sum(e * e))
        return self

    def merge(self, other: "LogSumExp") -> "LogSumExp":
        if other.peak == -math.inf:
            self.count += other.count
            return self
        if other.peak > self.peak:
            scale = math.exp(self.peak - other.peak) if self.peak > -math.inf else 0.0
            self.s1, self.s2, self.peak = self.s1 * scale, self.s2 * scale * scale, other.peak
        f = math.exp(other.peak - self.peak)
        self.s1 += other.s1 * f
        self.s2 += other.s2 * f * f
        self.count += other.count
        return self

    def log_mean(self) -> float:
        if self.s1 == 0.0:
            return -math.inf
        return self.peak + math.log(self.s1 / self.count)

    def log_std_error(self) -> float:
        n = self.count
        if self.s1 == 0.0 or n < 2:
            return -math.inf
        m1 = self.s1 / n
        var = max(self.s2 / n - m1 * m1, 0.0) * n / (n - 1)
        if var == 0.0:
            return -math.inf
        return self.peak + 0.5 * math.log(var / n)


def _estimate(name, x, acc: LogSumExp, n, seed, threads, scale_log: float = 0.0) -> MCEstimate:
    lm = acc.log_mean() + scale_log
    lse = acc.log_std_error() + scale_log
    return MCEstimate(name, float(x), math.exp(lm), lm, math.exp(lse), lse, n, seed, threads)


def _run_chunks(n: int, work, threads: int = 1) -> list:
    sizes = chunk_sizes(n)
    jobs = list(enumerate(sizes))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda job: work(*job), jobs))
    return [work(k, size) for k, size in jobs]


def _polar_log_weights(g, alpha, d, xs, Z, density: bool):
    with np.errstate(all="ignore"):
        gv = g.batch(Z)
    pos = gv > 0
    out = []
    for x in xs:
        lw = np.full(gv.shape, -np.inf)
        if pos.any():
            t = (x / gv[pos]) ** (2.0 / alpha)
            if density:
                lw[pos] = log_chisq_excess_moment(d, t)
            else:
                lw[pos] = log_upper_reg_gamma(d / 2, t / 2)
        out.append(lw)
    return out


def _polar(g: HomogeneousFn, alpha, d, x, n, seed, threads, density: bool):
    if n < 1000:
        raise ValueError("n must be at least 1000")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise ValueError("x must be positive")

    def work(k, size):
        Z = sphere_chunk(d, size, seed, k)
        return [LogSumExp().add(lw) for lw in _polar_log_weights(g, alpha, d, xs, Z, density)]

    parts = _run_chunks(n, work, threads)
    out = []
    for i, xv in enumerate(xs):
        acc = LogSumExp()
        for p in parts:
            acc.merge(p[i])
        if density:
            out.append(_estimate("conditional_density", xv, acc, n, seed, threads, -math.log(alpha * xv)))
        else:
            out.append(_estimate("conditional_tail", xv, acc, n, seed, threads))
    return out if np.ndim(x) else out[0]


def conditional_tail(g: HomogeneousFn, alpha: float, d: int, x, n: int, seed: int = 0, threads: int = 1):
    """Unbiased estimate of ``P{g(eta) > x}`` by averaging exact chi tails over uniform directions.

    ``x`` may be a scalar or a ladder; the ladder reuses the same directions.
    """
    return _polar(g, alpha, d, x, n, seed, threads, density=False)


def conditional_density(g: HomogeneousFn, alpha: float, d: int, x, n: int, seed: int = 0, threads: int = 1):
    """Estimate of the density of ``g(eta)`` at ``x`` from the same directions as :func:`conditional_tail`.

    Uses ``p(x) = (E{|eta|^2; g(eta) > x} - d P{g(eta) > x}) / (alpha x)``
    with both terms conditioned on the direction; their per-sample
    difference is evaluated in closed form.
    """
    return _polar(g, alpha, d, x, n, seed, threads, density=True)


def _sqrt_psd(B):
    lam, Q = np.linalg.eigh(np.asarray(B, dtype=float))
    return (Q * np.sqrt(np.clip(lam, 0.0, None))) @ Q.T


def _fraction_estimate(name, x, hits: int, n: int, seed: int, threads: int) -> MCEstimate:
    p = hits / n
    se = math.sqrt(max(p * (1 - p), 0.0) / (n - 1)) if n > 1 else math.inf
    lm = math.log(p) if p > 0 else -math.inf
    lse = math.log(se) if se > 0 else -math.inf
    return MCEstimate(name, float(x), p, lm, se, lse, n, seed, threads)


def plain_tail(h: HomogeneousFn, B, x, n: int, seed: int = 0, threads: int = 1):
    """Crude estimate: draw ``xi = sqrt(B) eta`` and count ``h(xi) > x``."""
    if n < 1000:
        raise ValueError("n must be at least 1000")
    d = h.dim
    root = np.eye(d) if B is None else _sqrt_psd(B)
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    def work(k, size):
        xi = chunk_generator(seed, k).standard_normal((size, d)) @ root.T
        with np.errstate(all="ignore"):
            hv = h.batch(xi)
        return [int(np.count_nonzero(hv > xv)) for xv in xs]

    parts = _run_chunks(n, work, threads)
    out = [_fraction_estimate("plain", xv, sum(p[i] for p in parts), n, seed, threads)
           for i, xv in enumerate(xs)]
    return out if np.ndim(x) else out[0]


def near_max_probability(g: HomogeneousFn, d: int, t, n: int, seed: int = 0, g_hat: float | None = None,
                         threads: int = 1):
    """Fraction of uniform directions with ``g(zeta) > g_hat - t``."""
    if g_hat is None:
        from .maximize import find_maximizers
        g_hat = find_maximizers(g).g_hat
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0) or np.any(ts > g_hat * (1 + 1e-12)):
        raise ValueError("t must lie in (0, g_hat]")

    def work(k, size):
        gv = g.batch(sphere_chunk(d, size, seed, k))
        return [int(np.count_nonzero(gv > g_hat - tv)) for tv in ts]

    parts = _run_chunks(n, work, threads)
    out = [_fraction_estimate("plain", tv, sum(p[i] for p in parts), n, seed, threads)
           for i, tv in enumerate(ts)]
    return out if np.ndim(t) else out[0]


def det_product_chi_sample(n_matrix: int, n: int, seed: int = 0) -> np.ndarray:
    """Determinants whose squares are products of independent chi-squares with ``1..n_matrix`` d.o.f.

    Each value gets an independent fair sign drawn from the same substream.
    """
    if n_matrix < 2:
        raise ValueError("n_matrix >= 2")
    out = []
    for k, size in enumerate(chunk_sizes(n)):
        rng = chunk_generator(seed, k)
        sq = np.ones(size)
        for i in range(1, n_matrix + 1):
            sq *= rng.chisquare(i, size)
        sign = np.where(rng.integers(0, 2, size) == 1, 1.0, -1.0)
        out.append(sign * np.sqrt(sq))
    return np.concatenate(out)


def det_direct_sample(n_matrix: int, n: int, seed: int = 0) -> np.ndarray:
    """Determinants of ``n_matrix x n_matrix`` matrices with i.i.d. standard normal entries."""
    out = []
    for k, size in enumerate(chunk_sizes(n)):
        A = chunk_generator(seed, k).standard_normal((size, n_matrix, n_matrix))
        out.append(np.linalg.det(A))
    return np.concatenate(out)
