import math

import numpy as np
import pytest

from chaostail import catalog
from chaostail.function import HomogeneousFn
from chaostail.hessian import NotMaximumError, SaddleDegeneracyError, detect_manifold_dim
from chaostail.maximize import (
    CLUSTER_RADIUS, FINITE, MANIFOLD, NoPositiveMaximumError, default_starts, find_maximizers,
)


def _hausdorff(A, B):
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return max(D.min(axis=1).max(), D.min(axis=0).max())


def test_product_two():
    ms = find_maximizers(HomogeneousFn.from_expr("u1*u2", 2, 2))
    assert ms.kind == FINITE and ms.g_hat == pytest.approx(0.5, abs=1e-12)
    s = math.sqrt(0.5)
    assert _hausdorff(ms.points, np.array([[s, s], [-s, -s]])) < 1e-6


def test_product_three():
    ms = find_maximizers(HomogeneousFn.from_expr("u1*u2*u3", 3, 3))
    assert ms.g_hat == pytest.approx(3 ** -1.5, rel=1e-10)
    s = 1 / math.sqrt(3)
    expected = np.array([[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]])
    assert _hausdorff(ms.points, expected) < 1e-6


def test_lp_sum_cubic():
    ms = find_maximizers(HomogeneousFn.from_expr("abs(u1)^3+abs(u2)^3", 3, 2))
    assert ms.g_hat == pytest.approx(1.0, abs=1e-12)
    assert _hausdorff(ms.points, np.array([[1, 0], [-1, 0], [0, 1], [0, -1.0]])) < 1e-6


def test_invariants_and_determinism():
    g = HomogeneousFn.from_expr("u1*u2*u3", 3, 3)
    ms = find_maximizers(g, seed=5)
    np.testing.assert_allclose(np.linalg.norm(ms.points, axis=1), 1.0, atol=1e-10)
    assert np.all(np.abs(g.batch(ms.points) - ms.g_hat) <= 1e-8 * (1 + ms.g_hat))
    for v in ms.points:
        grad = g.gradient(v)
        assert np.linalg.norm(grad - (grad @ v) * v) <= ms.tol * (1 + ms.g_hat) * 10
        assert grad @ v == pytest.approx(g.alpha * ms.g_hat, abs=1e-8 * (1 + ms.g_hat))
    D = np.linalg.norm(ms.points[:, None] - ms.points[None], axis=2) + np.eye(len(ms.points)) * 10
    assert D.min() > CLUSTER_RADIUS
    again = find_maximizers(g, seed=5)
    np.testing.assert_array_equal(ms.points, again.points)
    assert ms.g_hat == again.g_hat


def test_manifold_detection_circle():
    ms = find_maximizers(catalog.quadratic_form(1, 2, 2).g)
    assert ms.kind == MANIFOLD and ms.m == 1 and ms.g_hat == pytest.approx(2.0)


def test_no_positive_maximum():
    with pytest.raises(NoPositiveMaximumError, match="not positive anywhere"):
        find_maximizers(HomogeneousFn.from_expr("-u1^2-u2^2", 2, 2))


def test_too_few_starts():
    with pytest.raises(ValueError):
        find_maximizers(HomogeneousFn.from_expr("u1*u2", 2, 2), starts=10)
    assert default_starts(3) == 200 and default_starts(9) == 450


def test_detect_dim_examples():
    g = catalog.quadratic_form(1, 1, 2).g
    assert detect_manifold_dim(g, [0, 0, 1.0], 2, 2.0) == 0
    g = catalog.quadratic_form(1, 2, 2).g
    assert detect_manifold_dim(g, [0, 1.0, 0], 2, 2.0) == 1


def test_detect_dim_rejects_non_maxima():
    g = catalog.quadratic_form(1, 2, 3).g
    with pytest.raises(SaddleDegeneracyError):
        detect_manifold_dim(g, [0, 1.0, 0], 2, 2.0)
    with pytest.raises(NotMaximumError):
        detect_manifold_dim(g, [1.0, 0, 0], 2, 1.0)
