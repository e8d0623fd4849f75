"""Second-order forward-mode jets.

A :class:`DualTower` carries a value together with its gradient and Hessian
with respect to a fixed set of ``d`` seed variables.  Every field may carry
leading batch dimensions, so one tower can represent the same jet evaluated
at many points at once: ``value`` has shape ``S``, ``first`` has shape
``S + (d,)`` and ``second`` has shape ``S + (d, d)``.

Arithmetic follows the product and chain rules truncated at second order.
All Hessian updates are written as sums of symmetric terms, so the Hessian
stays bit-for-bit symmetric.
"""

from __future__ import annotations

import math

import numpy as np


class DomainError(ArithmeticError):
    """Evaluation left the domain of the expression (x/0, 0**negative, ...)."""


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class DualTower:
    """Value, gradient and Hessian of a scalar with respect to ``d`` seeds."""

    __slots__ = ("value", "first", "second", "nonsmooth")
    __array_priority__ = 1000  # make numpy defer to our reflected operators

    def __init__(self, value, first, second, nonsmooth=False):
        self.value = value
        self.first = first
        self.second = second
        self.nonsmooth = bool(nonsmooth)

    # -- construction -----------------------------------------------------
    @classmethod
    def seed(cls, value, index: int, dim: int) -> "DualTower":
        """Independent variable number ``index`` (0-based) with value ``value``."""
        value = np.asarray(value, dtype=float)
        first = np.zeros(value.shape + (dim,))
        first[..., index] = 1.0
        second = np.zeros(value.shape + (dim, dim))
        return cls(value if value.shape else float(value), first, second)

    @classmethod
    def seeds(cls, point) -> list["DualTower"]:
        """One seed per coordinate of ``point`` (shape ``(d,)`` or ``(n, d)``)."""
        point = np.asarray(point, dtype=float)
        dim = point.shape[-1]
        return [cls.seed(point[..., i], i, dim) for i in range(dim)]

    def _const(self, c) -> "DualTower":
        c = np.asarray(c, dtype=float)
        shape = np.broadcast_shapes(np.shape(self.value), c.shape)
        d = self.first.shape[-1]
        return DualTower(c if c.shape else float(c), np.zeros(shape + (d,)), np.zeros(shape + (d, d)))

    @property
    def dim(self) -> int:
        return self.first.shape[-1]

    def __repr__(self) -> str:
        return f"DualTower(value={self.value!r}, first={self.first!r}, second={self.second!r})"

    # -- unary chain rule -------------------------------------------------
    def _chain(self, f, f1, f2, nonsmooth=False) -> "DualTower":
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        first = f1[..., None] * self.first
        second = f1[..., None, None] * self.second + f2[..., None, None] * _outer(self.first, self.first)
        return DualTower(f, first, second, self.nonsmooth or nonsmooth)

    # -- binary arithmetic ------------------------------------------------
    def __add__(self, other):
        if isinstance(other, DualTower):
            return DualTower(self.value + other.value, self.first + other.first,
                             self.second + other.second, self.nonsmooth or other.nonsmooth)
        c = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(np.shape(self.value), c.shape)
        return DualTower(self.value + other,
                         np.broadcast_to(self.first, shape + self.first.shape[-1:]),
                         np.broadcast_to(self.second, shape + self.second.shape[-2:]),
                         self.nonsmooth)

    __radd__ = __add__

    def __neg__(self):
        return DualTower(-self.value, -self.first, -self.second, self.nonsmooth)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, DualTower):
            a, b = self, other
            av = np.asarray(a.value)
            bv = np.asarray(b.value)
            first = a.first * bv[..., None] + b.first * av[..., None]
            second = (a.second * bv[..., None, None] + b.second * av[..., None, None]
                      + _outer(a.first, b.first) + _outer(b.first, a.first))
            return DualTower(a.value * b.value, first, second, a.nonsmooth or b.nonsmooth)
        c = np.asarray(other, dtype=float)
        return DualTower(self.value * other, self.first * c[..., None],
                         self.second * c[..., None, None], self.nonsmooth)

    __rmul__ = __mul__

    def reciprocal(self) -> "DualTower":
        v = np.asarray(self.value, dtype=float)
        if np.any(v == 0):
            raise DomainError("division by zero")
        return self._chain(1.0 / self.value, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, DualTower):
            return self * other.reciprocal()
        c = np.asarray(other, dtype=float)
        if np.any(c == 0):
            raise DomainError("division by zero")
        return self * (1.0 / c)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        return power(self, k)

    # -- comparisons used by smooth-max selection ---------------------------
    def __float__(self):
        return float(self.value)


def _is_int(k: float) -> bool:
    return float(k).is_integer()


def power(x, k: float):
    """``x**k`` for a real literal exponent ``k``."""
    k = float(k)
    if not isinstance(x, DualTower):
        xv = np.asarray(x, dtype=float)
        if k < 0 and np.any(xv == 0):
            raise DomainError("0 raised to a negative power")
        if _is_int(k):
            return x ** int(k) if xv.shape == () else np.power(xv, k)
        return np.power(xv, k) if xv.shape else xv ** k
    v = np.asarray(x.value, dtype=float)
    if k == 0:
        return x._const(np.ones_like(v))
    if k == 1:
        return x
    if k < 0 and np.any(v == 0):
        raise DomainError("0 raised to a negative power")
    if _is_int(k):
        f = v ** k
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2) if k != 1 else np.zeros_like(v)
        return x._chain(f if f.shape else float(f), f1, f2)
    if np.any(v < 0):
        raise DomainError("negative base raised to a non-integer power")
    with np.errstate(divide="ignore", invalid="ignore"):
        f = v ** k
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2)
    singular = v == 0
    nonsmooth = False
    if np.any(singular):
        # d/dx x^k at 0 is finite only for k >= 1, second only for k >= 2
        f1 = np.where(singular, 0.0, f1)
        f2 = np.where(singular, 0.0, f2)
        nonsmooth = k < 2
    return x._chain(f if f.shape else float(f), f1, f2, nonsmooth)


def absolute(x):
    """``|x|``; derivatives at 0 are defined as 0 and flag the tower as nonsmooth."""
    if not isinstance(x, DualTower):
        return np.abs(x) if isinstance(x, np.ndarray) else abs(x)
    v = np.asarray(x.value, dtype=float)
    f = np.abs(v)
    return x._chain(f if f.shape else float(f), np.sign(v), np.zeros_like(v), bool(np.any(v == 0)))


def power_abs(x, k: float):
    """``|x|**k`` as one node, so that ``|x|**k`` with ``k >= 2`` stays C² at 0."""
    k = float(k)
    if not isinstance(x, DualTower):
        xv = np.abs(np.asarray(x, dtype=float))
        if k < 0 and np.any(xv == 0):
            raise DomainError("0 raised to a negative power")
        out = np.power(xv, k)
        return out if out.shape else float(out)
    v = np.asarray(x.value, dtype=float)
    a = np.abs(v)
    if k < 0 and np.any(a == 0):
        raise DomainError("0 raised to a negative power")
    if k == 0:
        return x._const(np.ones_like(v))
    s = np.sign(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = a ** k
        f1 = k * a ** (k - 1) * s
        f2 = k * (k - 1) * a ** (k - 2)
    zero = a == 0
    nonsmooth = False
    if np.any(zero):
        f1 = np.where(zero, 0.0, f1)
        f2 = np.where(zero, 2.0 if k == 2 else 0.0, f2)
        nonsmooth = k < 2
    return x._chain(f if f.shape else float(f), f1, f2, nonsmooth)


def sqrt(x):
    return power(x, 0.5)


def sin(x):
    if not isinstance(x, DualTower):
        return np.sin(x) if isinstance(x, np.ndarray) else math.sin(x)
    v = np.asarray(x.value, dtype=float)
    f = np.sin(v)
    return x._chain(f if f.shape else float(f), np.cos(v), -f)


def cos(x):
    if not isinstance(x, DualTower):
        return np.cos(x) if isinstance(x, np.ndarray) else math.cos(x)
    v = np.asarray(x.value, dtype=float)
    f = np.cos(v)
    return x._chain(f if f.shape else float(f), -np.sin(v), -f)


def smooth_max(terms):
    """Pointwise maximum of several quantities.

    For towers the derivatives of the selected branch are returned, i.e. the
    maximum is treated patch-locally.  Ties keep the first branch.
    """
    terms = list(terms)
    if not any(isinstance(t, DualTower) for t in terms):
        out = terms[0]
        for t in terms[1:]:
            out = np.maximum(out, t)
        return out
    proto = next(t for t in terms if isinstance(t, DualTower))
    towers = [t if isinstance(t, DualTower) else proto._const(t) for t in terms]
    values = np.stack([np.broadcast_to(np.asarray(t.value, dtype=float), np.shape(proto.value))
                       for t in towers])
    idx = np.argmax(values, axis=0)
    if values.ndim == 1:
        best = towers[int(idx)]
        return DualTower(best.value, best.first, best.second, any(t.nonsmooth for t in towers))
    firsts = np.stack([np.broadcast_to(t.first, proto.first.shape) for t in towers])
    seconds = np.stack([np.broadcast_to(t.second, proto.second.shape) for t in towers])
    value = np.take_along_axis(values, idx[None], axis=0)[0]
    first = np.take_along_axis(firsts, idx[None, ..., None], axis=0)[0]
    second = np.take_along_axis(seconds, idx[None, ..., None, None], axis=0)[0]
    return DualTower(value, first, second, any(t.nonsmooth for t in towers))


def value_of(x):
    return x.value if isinstance(x, DualTower) else x
