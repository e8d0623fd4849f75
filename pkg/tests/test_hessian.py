import math

import numpy as np
import pytest

from chaostail import catalog
from chaostail.function import HomogeneousFn, NotC2Error
from chaostail.geometry import TangentFrame, random_rotation, tangent_frame, to_cartesian
from chaostail.hessian import (
    DEGENERATE, NONDEGENERATE_MAX, NOT_MAX, RankMismatchError, TangentHessian,
    local_chart_hessian_check, nondegeneracy_check, pseudo_det_minor, tangent_hessian,
)

S = math.sqrt(0.5)


def test_product_two_hessian():
    t = tangent_hessian(HomogeneousFn.from_expr("u1*u2", 2, 2), [S, S], 2, 0.5)
    np.testing.assert_allclose(t.H, [[-1.0]], atol=1e-14)
    np.testing.assert_allclose(t.A, [[-2.0]], atol=1e-14)
    assert nondegeneracy_check(t) == NONDEGENERATE_MAX


def test_lp_sum_zero_hessian():
    t = tangent_hessian(catalog.lp_sum(3, 2).g, [1.0, 0.0], 3, 1.0)
    np.testing.assert_allclose(t.H, [[0.0]], atol=1e-14)
    np.testing.assert_allclose(t.A, [[-1.0]], atol=1e-14)


def test_quadratic_form_diagonal():
    a = (1.0, 1.5, 3.0)
    t = tangent_hessian(catalog.quadratic_form(*a).g, [0, 0, 1.0], 2, 3.0)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(t.H)), [2.0, 3.0], atol=1e-12)
    np.testing.assert_allclose(t.eigenvalues, [1 / 3 - 1, 0.5 - 1], atol=1e-12)


def test_classification():
    def fake(lam):
        lam = np.sort(np.asarray(lam, dtype=float))
        return TangentHessian(np.zeros(4), None, np.diag(lam), np.diag(lam), lam, 2.0, 1.0)
    assert nondegeneracy_check(fake([-1, 0, -0.5])) == DEGENERATE
    assert nondegeneracy_check(fake([-1, 0.1, -0.5])) == NOT_MAX
    assert nondegeneracy_check(fake([-1, -0.2, -0.5])) == NONDEGENERATE_MAX


def test_diameter_plane_is_degenerate():
    e = catalog.diameter(3, 2)
    v = np.array([S, 0, -S, 0, 0, 0])
    t = tangent_hessian(e.g, v, 2.0, 2.0)
    assert nondegeneracy_check(t) == DEGENERATE


def test_pseudo_det_minor():
    g = catalog.quadratic_form(1, 2, 2).g
    v = np.array([0, math.cos(0.4), math.sin(0.4)])
    t = tangent_hessian(g, v, 2, 2.0)
    assert pseudo_det_minor(t, 1) == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(RankMismatchError):
        pseudo_det_minor(t, 0)
    t0 = tangent_hessian(catalog.product_d(3).g, np.ones(3) / math.sqrt(3), 3, 3**-1.5)
    assert pseudo_det_minor(t0, 0) == pytest.approx(np.linalg.det(t0.A), rel=1e-12)


def test_pseudo_det_minor_matches_lp_sum_constant():
    alpha, d = 1.5, 3
    e = catalog.lp_sum(alpha, d)
    g_hat = d ** (1 - alpha / 2)
    t = tangent_hessian(e.g, np.ones(d) / math.sqrt(d), alpha, g_hat)
    minor = pseudo_det_minor(t, 0)
    assert minor == pytest.approx((alpha - 2) ** (d - 1), rel=1e-12)
    c2 = 2**d / (alpha * d ** (1 / alpha - 0.5) * math.sqrt(2 * math.pi) * (2 - alpha) ** ((d - 1) / 2))
    from_minor = 2**d / math.sqrt(2 * math.pi) / math.sqrt(abs(minor)) / (alpha * g_hat ** (1 / alpha))
    assert from_minor == pytest.approx(c2, rel=1e-12)


def test_nonsmooth_maximizer_rejected():
    # maximum at (1, 0) sits on the kink of abs(u2)
    g = HomogeneousFn.from_expr("u1^2-abs(u1)*abs(u2)", 2, 2)
    with pytest.raises(NotC2Error, match="not C"):
        tangent_hessian(g, [1.0, 0.0], 2, 1.0)


def test_frame_invariance(rng):
    g = catalog.product_d(4).g
    v = np.ones(4) / 2
    t1 = tangent_hessian(g, v, 4, 1 / 16)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    t2 = tangent_hessian(g, v, 4, 1 / 16, frame=TangentFrame(v, tangent_frame(v).basis @ Q))
    np.testing.assert_allclose(t1.eigenvalues, t2.eigenvalues, atol=1e-8)


def test_rotation_equivariance():
    g = catalog.product_d(3).g
    v = np.ones(3) / math.sqrt(3)
    Q = random_rotation(3, 11)
    gq = g.compose_linear(Q)
    t = tangent_hessian(g, v, 3, 3**-1.5)
    tq = tangent_hessian(gq, Q.T @ v, 3, 3**-1.5)
    np.testing.assert_allclose(t.eigenvalues, tq.eigenvalues, atol=1e-8)


def test_euler_differentiated(rng):
    for e in (catalog.product_d(3), catalog.lp_sum(4, 3), catalog.gaussian_determinant(2)):
        v = rng.normal(size=e.d)
        H, grad = e.g.hessian(v), e.g.gradient(v)
        np.testing.assert_allclose(H @ v, (e.alpha - 1) * grad, atol=1e-7 * (1 + np.abs(grad).max()))


def test_local_chart_hyperspherical_product_three():
    g = catalog.product_d(3).g
    phi0 = np.array([math.acos(1 / math.sqrt(3)), math.pi / 4])
    v = to_cartesian(1.0, phi0)
    err = local_chart_hessian_check(g, lambda p: to_cartesian(1.0, p), phi0, v, 3, 3**-1.5)
    assert err < 1e-5
    # independent values: |det g''(phi)| = 2^{d-1} d!/d^{d(d-1)/2}, det J = sqrt((d-1)!)/d^{(d-2)/2}
    d = 3
    lhs = 2 ** (d - 1) * math.factorial(d) / d ** (d * (d - 1) / 2) / (math.sqrt(math.factorial(d - 1)) / d ** ((d - 2) / 2)) ** 2
    t = tangent_hessian(g, v, 3, 3**-1.5)
    assert abs(np.linalg.det(t.H - 3 * 3**-1.5 * np.eye(2))) == pytest.approx(lhs, rel=1e-10)


def test_local_chart_great_circle():
    g = HomogeneousFn.from_expr("u1*u2", 2, 2)
    chart = lambda z: np.array([math.cos(z[0]), math.sin(z[0])])  # noqa: E731
    assert local_chart_hessian_check(g, chart, np.array([math.pi / 4]), np.array([S, S]), 2, 0.5) < 1e-8


def test_local_chart_rotated_quadratic_form():
    e = catalog.quadratic_form(1, 2, 5)
    Q = random_rotation(3, 2)
    gq = e.g.compose_linear(Q)
    v = Q.T @ np.array([0, 0, 1.0])
    phi = np.array([math.acos(v[0]), math.atan2(v[2], v[1])])
    assert local_chart_hessian_check(gq, lambda p: to_cartesian(1.0, p), phi, v, 2, 5.0) < 1e-5


def test_local_chart_requires_matching_point():
    g = HomogeneousFn.from_expr("u1*u2", 2, 2)
    with pytest.raises(ValueError):
        local_chart_hessian_check(g, lambda z: np.array([math.cos(z[0]), math.sin(z[0])]),
                                  np.array([0.0]), np.array([S, S]), 2, 0.5)
