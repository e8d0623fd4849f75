import math

import numpy as np
import pytest

from chaostail import catalog
from chaostail.asymptotics import ChartRequiredError, DegenerateHessianError, analyze, tail_leading

ALL = catalog.names()


def _analyze(e):
    return analyze(e.g, e.covariance, list(e.charts) or None)


def _complete(e):
    ref = e.reference
    return ref.h0 is not None and not ref.degenerate


@pytest.mark.parametrize("name", [n for n in ALL if _complete(catalog.get(n))])
def test_pipeline_reproduces_reference(name):
    e = catalog.get(name)
    res = _analyze(e).result
    ref = e.reference
    assert res.g_hat == pytest.approx(ref.g_hat, rel=1e-8)
    assert res.m == ref.m
    assert res.h0 == pytest.approx(ref.h0, rel=e.tolerance)


@pytest.mark.parametrize("name", [n for n in ALL if catalog.get(n).reference.rate is not None])
def test_exponent_structure(name):
    e = catalog.get(name)
    ref = e.reference
    if ref.g_hat is None:
        pytest.skip("rate given relative to an unknown maximum")
    assert 1 / (2 * ref.g_hat ** (2 / e.alpha)) == pytest.approx(ref.rate, rel=1e-12)
    if ref.m is not None and ref.tail_power is not None:
        assert (ref.m - 1) / e.alpha == pytest.approx(ref.tail_power, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("name", ["gaussian_determinant_n2", "gaussian_determinant_n3", "spherical_determinant_n2"])
def test_determinant_needs_chart(name):
    e = catalog.get(name)
    with pytest.raises(ChartRequiredError) as info:
        _analyze(e)
    assert info.value.g_hat == pytest.approx(e.reference.g_hat, rel=1e-6)
    assert info.value.m == e.reference.m
    assert catalog.reference_tail(e, 10.0) == "unavailable"
    assert catalog.reference_density(e, 10.0) == "unavailable"


@pytest.mark.parametrize("name", ["diameter_n2_m2", "diameter_n3_m2"])
def test_degenerate_diameter(name):
    e = catalog.get(name)
    assert e.reference.degenerate
    with pytest.raises(DegenerateHessianError):
        _analyze(e)


def test_product_cov3_is_shape_only():
    e = catalog.get("product_cov3")
    res = _analyze(e).result
    assert res.m == 0
    assert (res.m - 1) / e.alpha == pytest.approx(e.reference.tail_power)
    # frozen from the pipeline; the maximum over the correlated ellipsoid has no closed form
    assert res.g_hat == pytest.approx(0.3177570068, rel=1e-8)
    assert res.h0 == pytest.approx(0.2536696237, rel=1e-6)


def test_small_alpha_constant_reconciliation():
    for name in ("lp_sum_a1.5_d3", "lp_sum_a1.5_d2"):
        extra = catalog.get(name).reference.extra
        assert extra["c2_final"] == pytest.approx(extra["c2_hessian"], rel=1e-12)


def test_density_prefactor_consistency():
    for e in catalog.entries():
        ref = e.reference
        if ref.density_prefactor is None or ref.h0 is None:
            continue
        # the density prefactor multiplies x^((m+1)/alpha - 1) without the g_hat rescaling
        expected = ref.h0 / (e.alpha * ref.g_hat) * ref.g_hat ** (1 - (ref.m + 1) / e.alpha)
        assert ref.density_prefactor == pytest.approx(expected, rel=1e-12), e.name


def test_product2_tail_prefactor():
    for rho in (0.0, 0.5, -0.3):
        e = catalog.product2(rho)
        x = 50.0
        closed = e.reference.tail_prefactor * x**-0.5 * math.exp(-x / (1 + rho))
        assert catalog.reference_tail(e, x) == pytest.approx(closed, rel=1e-12)


def test_reference_tail_array():
    e = catalog.get("product_d3")
    x = np.array([10.0, 20.0])
    res = _analyze(e).result
    np.testing.assert_allclose(catalog.reference_tail(e, x), tail_leading(res, x)[0], rtol=1e-9)


def test_get_factory_syntax():
    e = catalog.get("quadratic_form(1, 2, 2)")
    assert e.d == 3 and e.reference.m == 1 and len(e.charts) == 1
    assert catalog.get("lp_sum(4,3)").name == catalog.get("lp_sum_a4_d3").name
    assert isinstance(catalog.get("product_d(3)").alpha, float)
    with pytest.raises(KeyError):
        catalog.get("nope")
    assert not catalog.is_known("product_d(9, 9)")
    assert catalog.is_known("diameter(2, 1)")


def test_invalid_parameters():
    with pytest.raises(ValueError):
        catalog.lp_sum(2, 3)
    with pytest.raises(ValueError):
        catalog.quadratic_form(-1, -2)
    with pytest.raises(ValueError):
        catalog.quadratic_form(1, 1)
    with pytest.raises(ValueError):
        catalog.product2(1.0)


def test_summary_is_json_ready():
    import json
    for e in catalog.entries():
        json.dumps(e.summary())


def test_radial_variants_gaussian_first():
    e = catalog.get("lp_sum_a4_d3")
    models = catalog.radial_models(e)
    assert models[0].describe()["kind"] == "GaussianChi"
    assert catalog.radial_models(catalog.get("spherical_lp_sum_a3_d3"))[0].describe()["kind"] == "PowerTransformed"


def test_names_are_unique_and_buildable():
    assert len(set(ALL)) == len(ALL) >= 25
    for n in ALL:
        e = catalog.get(n)
        assert e.g.dim == e.d
