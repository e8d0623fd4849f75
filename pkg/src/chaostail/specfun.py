"""Incomplete gamma functions, chi-family laws and the Watson leading term.

The regularized incomplete gamma pair uses the power series of ``P`` when
``t < s + 1`` and a modified-Lentz continued fraction for ``Q`` otherwise.
Both are evaluated in log space so that tails far below the double-precision
underflow threshold remain representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 2000


def _as_pair(s, t):
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if np.any(s <= 0):
        raise ValueError("shape parameter s must be positive")
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("argument t must be nonnegative")
    return s.astype(float).ravel(), t.astype(float).ravel(), s.shape


def _log_prefactor(s, t):
    # log(t^s e^-t / Gamma(s))
    with np.errstate(divide="ignore"):
        return s * np.log(t) - t - gammaln(s)


def _series_log_p(s, t):
    """log P(s, t) by the power series; intended for t < s + 1."""
    ap = s.copy()
    term = 1.0 / s
    total = term.copy()
    active = np.ones(s.shape, dtype=bool)
    for _ in range(_MAXIT):
        ap = ap + 1.0
        term = np.where(active, term * t / ap, 0.0)
        total = total + term
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    with np.errstate(divide="ignore"):
        return _log_prefactor(s, t) + np.log(total)


def _cf_log_q(s, t):
    """log Q(s, t) by Lentz's continued fraction; intended for t >= s + 1."""
    b = t + 1.0 - s
    c = np.full(s.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(s.shape, dtype=bool)
    for i in range(1, _MAXIT):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h = h * delta
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return _log_prefactor(s, t) + np.log(h)


def _log_pq(s, t):
    s, t, shape = _as_pair(s, t)
    log_p = np.empty_like(t)
    log_q = np.empty_like(t)
    zero = t == 0
    inf = np.isinf(t)
    ser = (t < s + 1.0) & ~zero
    cf = ~ser & ~zero & ~inf
    log_p[zero], log_q[zero] = -np.inf, 0.0
    log_p[inf], log_q[inf] = 0.0, -np.inf
    if ser.any():
        lp = _series_log_p(s[ser], t[ser])
        log_p[ser] = lp
        log_q[ser] = np.log1p(-np.exp(lp))
    if cf.any():
        lq = _cf_log_q(s[cf], t[cf])
        log_q[cf] = lq
        log_p[cf] = np.log1p(-np.exp(lq))
    return log_p.reshape(shape), log_q.reshape(shape)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def log_upper_reg_gamma(s, t):
    """``log Q(s, t)``; finite far below the underflow threshold of ``Q`` itself."""
    return _out(_log_pq(s, t)[1])


def log_lower_reg_gamma(s, t):
    return _out(_log_pq(s, t)[0])


def upper_reg_gamma(s, t):
    """Regularized upper incomplete gamma ``Q(s, t) = Gamma(s, t) / Gamma(s)``."""
    return _out(np.exp(_log_pq(s, t)[1]))


def lower_reg_gamma(s, t):
    """Regularized lower incomplete gamma ``P(s, t) = 1 - Q(s, t)``."""
    return _out(np.exp(_log_pq(s, t)[0]))


@dataclass(frozen=True)
class ChiAlpha:
    """Law of ``chi**alpha`` where ``chi**2`` is chi-square with ``d`` degrees of freedom."""

    d: int
    alpha: float

    def __post_init__(self):
        if self.d < 1 or self.alpha <= 0:
            raise ValueError("need d >= 1 and alpha > 0")

    def _t(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("x must be positive")
        return x ** (2.0 / self.alpha) / 2.0

    def tail(self, x):
        return upper_reg_gamma(self.d / 2, self._t(x))

    def log_tail(self, x):
        return log_upper_reg_gamma(self.d / 2, self._t(x))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("x must be positive")
        d, a = self.d, self.alpha
        log_c = -math.log(a) - (d / 2 - 1) * math.log(2) - math.lgamma(d / 2)
        return _out(log_c + (d / a - 1) * np.log(x) - x ** (2 / a) / 2)

    def density(self, x):
        return _out(np.exp(self.log_density(x)))

    def log_tail_asymptotic(self, x):
        """Leading-order tail ``x^((d-2)/alpha) e^(-x^(2/alpha)/2) / (2^(d/2-1) Gamma(d/2))``."""
        x = np.asarray(x, dtype=float)
        d, a = self.d, self.alpha
        log_c = -(d / 2 - 1) * math.log(2) - math.lgamma(d / 2)
        return _out(log_c + (d - 2) / a * np.log(x) - x ** (2 / a) / 2)


def chi_alpha_tail(m: ChiAlpha, x):
    """Exact ``P{chi^alpha > x} = Q(d/2, x^(2/alpha)/2)``."""
    return m.tail(x)


def chi_alpha_log_tail(m: ChiAlpha, x):
    return m.log_tail(x)


def chi_alpha_density(m: ChiAlpha, x):
    return m.density(x)


def chisq_truncated_second_moment(d: int, t):
    """``E[X 1{X > t}]`` for ``X`` chi-square with ``d`` degrees of freedom, equal to ``d Q(d/2+1, t/2)``."""
    if d < 1:
        raise ValueError("d >= 1")
    return _out(d * np.asarray(upper_reg_gamma(d / 2 + 1, np.asarray(t, dtype=float) / 2)))


def log_chisq_excess_moment(d: int, t):
    """``log(E[X; X > t] - d P{X > t})`` for chi-square ``X`` with ``d`` degrees of freedom.

    The difference ``d (Q(d/2+1, t/2) - Q(d/2, t/2))`` equals
    ``d (t/2)^(d/2) e^(-t/2) / Gamma(d/2+1)``, which is evaluated directly to
    avoid the cancellation between the two tails.
    """
    t = np.asarray(t, dtype=float)
    s = d / 2
    with np.errstate(divide="ignore"):
        return _out(math.log(d) + s * np.log(t / 2) - t / 2 - math.lgamma(s + 1))


def watson_leading(y0: float, beta: float, c: float, delta: float, gamma: float, x):
    """Leading term of ``I(x) = int_{x/y0}^inf y^gamma e^(-c y^beta) (y0 - x/y)^delta dy``.

    Returns ``(x/y0)^(1+gamma-(1+delta) beta) e^(-c (x/y0)^beta) Gamma(1+delta) y0^delta / (c beta)^(1+delta)``.
    ``delta = 0`` is admitted; with ``gamma = beta - 1`` the term is then exact.
    """
    return _out(np.exp(log_watson_leading(y0, beta, c, delta, gamma, x)))


def log_watson_leading(y0, beta, c, delta, gamma, x):
    if y0 <= 0 or beta <= 0 or c <= 0 or delta < 0:
        raise ValueError("need y0, beta, c > 0 and delta >= 0")
    z = np.asarray(x, dtype=float) / y0
    return _out(
        (1 + gamma - (1 + delta) * beta) * np.log(z)
        - c * z**beta
        + math.lgamma(1 + delta)
        + delta * math.log(y0)
        - (1 + delta) * math.log(c * beta)
    )
