"""Built-in chaos instances with closed-form reference constants."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .asymptotics import Chart
from .exprlang import jet
from .function import HomogeneousFn
from .radial import GaussianChi, PowerTransformed, RadialModel, Weibullian


@dataclass(frozen=True)
class Reference:
    g_hat: float | None
    m: int | None
    h0: float | None = None
    description: str = ""
    tail_prefactor: float | None = None
    density_prefactor: float | None = None
    # tail(x) ~ c * x^tail_power * exp(-rate * x^(2/alpha)); c may be unknown
    tail_power: float | None = None
    rate: float | None = None
    polar_h0: float | None = None
    degenerate: bool = False
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    g: HomogeneousFn  # function of the original (possibly correlated) vector
    alpha: float
    d: int
    reference: Reference
    covariance: np.ndarray | None = None
    charts: tuple = ()
    radial_variants: tuple = ()
    tolerance: float = 1e-5
    smooth: bool = True

    def summary(self) -> dict:
        ref = self.reference
        return {
            "name": self.name,
            "alpha": self.alpha,
            "d": self.d,
            "function": self.g.source or self.g.name,
            "covariance": None if self.covariance is None else self.covariance.tolist(),
            "charts": [c.name for c in self.charts],
            "radial_variants": [getattr(r, "describe", lambda: {})() for r in self.radial_variants],
            "tolerance": self.tolerance,
            "reference": {k: v for k, v in ref.__dict__.items() if v is not None and v != {}},
        }


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


# -- subspace spheres -------------------------------------------------------------------
def subspace_sphere_chart(W, name: str = "sphere") -> Chart:
    """Unit sphere of the span of the orthonormal columns of ``W`` (2 to 4 columns)."""
    W = np.asarray(W, dtype=float)
    d, k = W.shape
    if not 2 <= k <= 4:
        raise ValueError("subspace spheres of dimension 1 to 3 only")

    def func(s):
        angles = [math.pi * si for si in s[:-1]] + [2 * math.pi * s[-1]]
        coef, prefix = [], 1.0
        for a in angles:
            coef.append(prefix * jet.cos(a))
            prefix = prefix * jet.sin(a)
        coef.append(prefix)
        zero = s[0] * 0.0
        out = []
        for i in range(d):
            acc = zero
            for j in range(k):
                if W[i, j] != 0.0:
                    acc = acc + coef[j] * W[i, j]
            out.append(acc)
        return out

    return Chart(func, k - 1, d, name)


# -- entries ----------------------------------------------------------------------------------
def lp_sum(alpha: float, d: int) -> CatalogEntry:
    """``sum_i |u_i|^alpha`` (alpha != 2)."""
    if alpha == 2:
        raise ValueError("alpha = 2 is the chi-square case; use norm_power")
    src = "+".join(f"abs(u{i})^{_fmt(alpha)}" for i in range(1, d + 1))
    g = HomogeneousFn.from_expr(src, alpha, d, name=f"lp_sum({_fmt(alpha)},{d})")
    if alpha < 2:
        g_hat = d ** (1 - alpha / 2)
        c2 = 2**d / (alpha * d ** (1 / alpha - 0.5) * math.sqrt(2 * math.pi) * (2 - alpha) ** ((d - 1) / 2))
        # same constant written through the tangent Hessian alpha(alpha-1) d^(1-alpha/2) I
        Hdiag = alpha * (alpha - 1) * d ** (1 - alpha / 2)
        detA = (Hdiag / (alpha * g_hat) - 1) ** (d - 1)
        c2_hessian = 2**d / (alpha * g_hat ** (1 / alpha)) / (math.sqrt(2 * math.pi) * math.sqrt(abs(detA)))
        h0 = c2 * alpha * g_hat ** (1 / alpha)
        polar = 2 ** (1.5 * d - 1.5) * math.gamma(d / 2) * g_hat ** ((d - 1) / 2) / (
            math.sqrt(math.pi) * (alpha * (2 - alpha)) ** ((d - 1) / 2))
        ref = Reference(g_hat, 0, h0, f"2^{d} isolated maximizers (±d^-1/2, ...)",
                        density_prefactor=c2, tail_power=-1 / alpha, rate=d ** (1 - 2 / alpha) / 2,
                        polar_h0=polar, extra={"c2_final": c2, "c2_hessian": c2_hessian})
    else:
        h0 = 2 * d / math.sqrt(2 * math.pi)
        polar = (2 / alpha) ** ((d - 1) / 2) * d * math.gamma(d / 2) / math.sqrt(math.pi)
        ref = Reference(1.0, 0, h0, f"{2 * d} maximizers ±e_i", density_prefactor=h0 / alpha,
                        tail_power=-1 / alpha, rate=0.5, polar_h0=polar)
    radial = (GaussianChi(d, alpha), PowerTransformed(Weibullian(1.0, 0.0, 1.0, 1.0), alpha))
    return CatalogEntry(g.name, g, alpha, d, ref, radial_variants=radial,
                        tolerance=1e-5 if alpha > 2 else 1e-4)


def spherical_lp_sum(alpha: float, d: int) -> CatalogEntry:
    """``lp_sum`` for a spherically symmetric vector with an exponential radius."""
    e = lp_sum(alpha, d)
    return CatalogEntry(f"spherical_lp_sum({_fmt(alpha)},{d})", e.g, alpha, d, e.reference,
                        radial_variants=(PowerTransformed(Weibullian(1.0, 0.0, 1.0, 1.0), alpha),
                                         GaussianChi(d, alpha)), tolerance=1e-5)


def product2(rho: float = 0.0) -> CatalogEntry:
    """Product ``xi_1 xi_2`` of unit-variance Gaussians with correlation ``rho``."""
    if not -1 < rho < 1:
        raise ValueError("need -1 < rho < 1")
    g = HomogeneousFn.from_expr("u1*u2", 2, 2, name=f"product2({_fmt(rho)})")
    B = np.array([[1.0, rho], [rho, 1.0]])
    g_hat = (1 + rho) / 2
    ref = Reference(g_hat, 0, math.sqrt(1 + rho) / math.sqrt(math.pi), "two maximizers ±(1,1)/√2",
                    tail_prefactor=(1 + rho) / math.sqrt(2 * math.pi),
                    density_prefactor=1 / math.sqrt(2 * math.pi), tail_power=-0.5, rate=1 / (1 + rho))
    return CatalogEntry(g.name if rho else "product2", g, 2.0, 2, ref, covariance=B if rho else None)


def product_d(d: int) -> CatalogEntry:
    """Product ``u_1 ... u_d`` of independent standard normals."""
    src = "*".join(f"u{i}" for i in range(1, d + 1))
    g = HomogeneousFn.from_expr(src, d, d, name=f"product_d({d})")
    c = 2 ** ((d - 1) / 2) / math.sqrt(2 * math.pi * d)
    ref = Reference(d ** (-d / 2), 0, 2 ** ((d - 1) / 2) / math.sqrt(2 * math.pi),
                    f"{2 ** (d - 1)} maximizers with an even number of negative coordinates",
                    density_prefactor=c, tail_power=-1 / d, rate=d / 2)
    return CatalogEntry(g.name, g, float(d), d, ref)


def product_cov3() -> CatalogEntry:
    """Product of three correlated Gaussians; only the exponent structure is known."""
    g = HomogeneousFn.from_expr("u1*u2*u3", 3, 3, name="product_cov3")
    B = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.0]])
    ref = Reference(None, 0, None, "finitely many maximizers on an ellipsoid", tail_power=-1 / 3)
    return CatalogEntry(g.name, g, 3.0, 3, ref, covariance=B)


def quadratic_form(*a: float) -> CatalogEntry:
    """``sum_i a_i u_i^2`` with ``max a_i > 0``."""
    a = tuple(float(x) for x in a)
    d = len(a)
    top = max(a)
    if top <= 0:
        raise ValueError("largest coefficient must be positive")
    src = "+".join(f"{_fmt(c)}*u{i}^2" for i, c in enumerate(a, 1))
    name = "quadratic_form(" + ",".join(_fmt(c) for c in a) + ")"
    g = HomogeneousFn.from_expr(src, 2, d, name=name)
    idx = [i for i, c in enumerate(a) if c == top]
    mult = len(idx)
    prod = math.prod(1 / math.sqrt(1 - c / top) for c in a if c != top)
    # density ~ dens * x^(mult/2 - 1) * exp(-rate * x)
    dens = prod * top ** -(mult / 2) / (2 ** (mult / 2) * math.gamma(mult / 2))
    h0 = 2 * prod / (2 ** (mult / 2) * math.gamma(mult / 2))
    charts = ()
    if mult >= 2:
        if mult == d:
            raise ValueError("all coefficients equal: use norm_power")
        W = np.zeros((d, mult))
        for j, i in enumerate(idx):
            W[i, j] = 1.0
        charts = (subspace_sphere_chart(W, f"{name}:sphere"),)
    ref = Reference(top, mult - 1, h0, f"unit sphere of dimension {mult - 1} in the top eigenspace",
                    density_prefactor=dens, tail_power=(mult - 2) / 2, rate=1 / (2 * top))
    return CatalogEntry(name, g, 2.0, d, ref, charts=charts)


def scalar_product(*a: float) -> CatalogEntry:
    """``sum_i a_i u_i u_(n+i)``: scalar product of two independent Gaussian vectors."""
    a = tuple(float(x) for x in a)
    n = len(a)
    d = 2 * n
    src = "+".join(f"{_fmt(c)}*u{i}*u{n + i}" for i, c in enumerate(a, 1))
    name = "scalar_product(" + ",".join(_fmt(c) for c in a) + ")"
    g = HomogeneousFn.from_expr(src, 2, d, name=name)
    top = max(abs(c) for c in a)
    idx = [i for i, c in enumerate(a) if abs(c) == top]
    mult = len(idx)
    prod = math.prod(1 / math.sqrt(1 - c * c / top**2) for c in a if abs(c) != top)
    # density ~ dens * x^(mult/2 - 1) * exp(-rate * x)
    dens = prod * top ** -(mult / 2) / (2 ** (mult / 2) * math.gamma(mult / 2))
    h0 = 2 ** (1 - mult) * prod / math.gamma(mult / 2)
    charts = ()
    if mult >= 2:
        W = np.zeros((d, mult))
        for j, i in enumerate(idx):
            W[i, j] = 1 / math.sqrt(2)
            W[n + i, j] = math.copysign(1 / math.sqrt(2), a[i])
        charts = (subspace_sphere_chart(W, f"{name}:sphere"),)
    ref = Reference(top / 2, mult - 1, h0, "unit sphere in the span of (e_i ± e_(n+i))/√2",
                    density_prefactor=dens, tail_power=(mult - 2) / 2, rate=1 / top)
    return CatalogEntry(name, g, 2.0, d, ref, charts=charts)


def _leibniz(n: int, index: Callable[[int, int], int], scale: Callable[[int, int], float]):
    perms = []
    for p in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        perms.append((p, -1.0 if inv % 2 else 1.0))

    def det(u):
        total = None
        for p, sign in perms:
            term = None
            for i in range(n):
                f = u[index(i, p[i])]
                s = scale(i, p[i])
                if s != 1.0:
                    f = f * s
                term = f if term is None else term * f
            term = term * sign if sign < 0 else term
            total = term if total is None else total + term
        return total

    return det


def gaussian_determinant(n: int) -> CatalogEntry:
    """Determinant of an ``n x n`` matrix of i.i.d. standard normals (rows pasted)."""
    if not 2 <= n <= 4:
        raise ValueError("2 <= n <= 4")
    det = _leibniz(n, lambda i, j: n * i + j, lambda i, j: 1.0)
    g = HomogeneousFn(det, float(n), n * n, f"gaussian_determinant({n})", f"det of {n}x{n}")
    m = (n * n - n) // 2
    ref = Reference(n ** (-n / 2), m, None, "scaled rotation matrices (constant unknown)",
                    tail_power=(n - 1) / 2 - 1 / n, rate=n / 2)
    return CatalogEntry(g.name, g, float(n), n * n, ref, smooth=True)


def spherical_determinant(n: int) -> CatalogEntry:
    e = gaussian_determinant(n)
    ref = Reference(e.reference.g_hat, e.reference.m, None, "constant unknown",
                    extra={"power_of_xw": -(n * n + n - 2) / 4})
    return CatalogEntry(f"spherical_determinant({n})", e.g, e.alpha, e.d, ref,
                        radial_variants=(PowerTransformed(Weibullian(1.0, 0.0, 1.0, 1.0), float(n)),))


def goe_determinant(n: int, sigma: float = math.sqrt(2)) -> CatalogEntry:
    """Determinant of a symmetric matrix with ``A_ii = sigma eta_ii`` and ``A_ij = eta_ij``."""
    if not 2 <= n <= 4:
        raise ValueError("2 <= n <= 4")
    pos = {}  # upper triangle in row order
    k = 0
    for i in range(n):
        for j in range(i, n):
            pos[(i, j)] = pos[(j, i)] = k
            k += 1
    det = _leibniz(n, lambda i, j: pos[(i, j)], lambda i, j: sigma if i == j else 1.0)
    d = n * (n + 1) // 2
    g = HomogeneousFn(det, float(n), d, f"goe_determinant({n},{sigma:.6g})", f"det of symmetric {n}x{n}")
    ref = Reference((sigma**2 / n) ** (n / 2), 0, None, "diagonal maximizers (constant unknown)",
                    tail_power=-1 / n, rate=n / (2 * sigma**2))
    return CatalogEntry(g.name, g, float(n), d, ref)


def diameter(n: int, m_space: int) -> CatalogEntry:
    """Squared diameter ``max_{k<l} |eta_k - eta_l|^2`` of ``n`` Gaussian points in ``R^m_space``."""
    pairs = [(k, l) for k in range(n) for l in range(k + 1, n)]

    def func(u):
        terms = []
        for k, l in pairs:
            acc = None
            for c in range(m_space):
                diff = u[k * m_space + c] - u[l * m_space + c]
                sq = diff * diff
                acc = sq if acc is None else acc + sq
            terms.append(acc)
        return jet.smooth_max(terms) if len(terms) > 1 else terms[0]

    d = n * m_space
    name = f"diameter_n{n}_m{m_space}"
    g = HomogeneousFn(func, 2.0, d, name, f"max pairwise squared distance, {n} points in R^{m_space}")
    if m_space == 1:
        h0 = n * (n - 1) / math.sqrt(2 * math.pi)
        ref = Reference(2.0, 0, h0, f"{n * (n - 1)} points v_k = -v_l = ±1/√2",
                        tail_power=-0.5, rate=0.25,
                        extra={"diameter_tail_prefactor": n * (n - 1) / math.sqrt(math.pi)})
    else:
        ref = Reference(2.0, None, None, "degenerate tangent Hessian at every maximizer", degenerate=True)
    return CatalogEntry(name, g, 2.0, d, ref)


def norm_power(alpha: float, d: int) -> CatalogEntry:
    """``|u|^alpha``: every direction is a maximizer."""
    src = "(" + "+".join(f"u{i}^2" for i in range(1, d + 1)) + f")^{_fmt(alpha / 2)}"
    g = HomogeneousFn.from_expr(src, alpha, d, name=f"norm_power({_fmt(alpha)},{d})")
    h0 = 1 / (2 ** (d / 2 - 1) * math.gamma(d / 2))
    ref = Reference(1.0, d - 1, h0, "the whole sphere", tail_power=(d - 2) / alpha, rate=0.5)
    return CatalogEntry(g.name, g, float(alpha), d, ref)


_FACTORIES: dict[str, Callable[..., CatalogEntry]] = {
    "lp_sum": lp_sum,
    "spherical_lp_sum": spherical_lp_sum,
    "product2": product2,
    "product_d": product_d,
    "quadratic_form": quadratic_form,
    "scalar_product": scalar_product,
    "gaussian_determinant": gaussian_determinant,
    "spherical_determinant": spherical_determinant,
    "goe_determinant": goe_determinant,
    "diameter": diameter,
    "norm_power": norm_power,
}


def _named() -> dict[str, Callable[[], CatalogEntry]]:
    return {
        "lp_sum_a4_d3": lambda: lp_sum(4, 3),
        "lp_sum_a3_d2": lambda: lp_sum(3, 2),
        "lp_sum_a1.5_d3": lambda: lp_sum(1.5, 3),
        "lp_sum_a1.5_d2": lambda: lp_sum(1.5, 2),
        "product2": lambda: product2(0.0),
        "product2_rho05": lambda: product2(0.5),
        "product_d2": lambda: product_d(2),
        "product_d3": lambda: product_d(3),
        "product_d4": lambda: product_d(4),
        "product_cov3": product_cov3,
        "quadratic_form_1_1_2": lambda: quadratic_form(1, 1, 2),
        "quadratic_form_1_2_2": lambda: quadratic_form(1, 2, 2),
        "quadratic_form_1_3_3_3": lambda: quadratic_form(1, 3, 3, 3),
        "scalar_product_1_2": lambda: scalar_product(1, 2),
        "scalar_product_1_2_2": lambda: scalar_product(1, 2, -2),
        "gaussian_determinant_n2": lambda: gaussian_determinant(2),
        "gaussian_determinant_n3": lambda: gaussian_determinant(3),
        "goe_determinant_n2": lambda: goe_determinant(2),
        "diameter_n2_m1": lambda: diameter(2, 1),
        "diameter_n3_m1": lambda: diameter(3, 1),
        "diameter_n2_m2": lambda: diameter(2, 2),
        "diameter_n3_m2": lambda: diameter(3, 2),
        "spherical_lp_sum_a3_d3": lambda: spherical_lp_sum(3, 3),
        "spherical_lp_sum_a1.5_d3": lambda: spherical_lp_sum(1.5, 3),
        "spherical_determinant_n2": lambda: spherical_determinant(2),
        "norm_a2_d3": lambda: norm_power(2, 3),
        "norm_a3_d3": lambda: norm_power(3, 3),
    }


def names() -> list[str]:
    return list(_named())


def entries() -> list[CatalogEntry]:
    return [make() for make in _named().values()]


_CALL = re.compile(r"^\s*([a-z_0-9]+)\s*\((.*)\)\s*$")


def get(name: str) -> CatalogEntry:
    """Look up a named entry, or build one from ``factory(arg, ...)`` syntax."""
    named = _named()
    if name in named:
        return named[name]()
    m = _CALL.match(name)
    if m and m.group(1) in _FACTORIES:
        args = [float(a) for a in m.group(2).split(",") if a.strip()]
        args = [int(a) if a.is_integer() else a for a in args]
        return _FACTORIES[m.group(1)](*args)
    raise KeyError(f"unknown catalog entry {name!r}")


def is_known(name: str) -> bool:
    try:
        get(name)
        return True
    except (KeyError, ValueError, TypeError):
        return False


def reference_tail(entry: CatalogEntry, x):
    """Closed-form leading tail, or ``"unavailable"`` when the constant is unknown."""
    ref = entry.reference
    if ref.h0 is None or ref.g_hat is None or ref.m is None:
        return "unavailable"
    z = np.asarray(x, dtype=float) / ref.g_hat
    out = ref.h0 * z ** ((ref.m - 1) / entry.alpha) * np.exp(-z ** (2 / entry.alpha) / 2)
    return float(out) if np.ndim(out) == 0 else out


def reference_density(entry: CatalogEntry, x):
    ref = entry.reference
    if ref.h0 is None or ref.g_hat is None or ref.m is None:
        return "unavailable"
    z = np.asarray(x, dtype=float) / ref.g_hat
    out = ref.h0 / (entry.alpha * ref.g_hat) * z ** ((ref.m + 1) / entry.alpha - 1) * np.exp(-z ** (2 / entry.alpha) / 2)
    return float(out) if np.ndim(out) == 0 else out


def exponent_structure(entry: CatalogEntry) -> dict:
    ref = entry.reference
    return {"tail_power": ref.tail_power, "rate": ref.rate, "alpha": entry.alpha}


def radial_models(entry: CatalogEntry) -> tuple[RadialModel, ...]:
    return entry.radial_variants
