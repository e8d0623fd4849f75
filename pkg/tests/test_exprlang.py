import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaostail.exprlang import (
    Abs, Add, DomainError, ExprSyntaxError, Mul, Pow, UnknownIdentifierError, Var,
    VariableIndexError, check_homogeneity, eval_jet, parse, parse_chart_component,
)
from chaostail.hessian import fd_hessian


def test_product_parses_to_mul_of_vars():
    e = parse("u1*u2", 2)
    assert e.ast == Mul(Var(1), Var(2))


def test_sum_of_abs_powers():
    e = parse("abs(u1)^3 + abs(u2)^3", 2)
    assert isinstance(e.ast, Add)
    for side in (e.ast.left, e.ast.right):
        assert isinstance(side, Pow) and isinstance(side.base, Abs) and side.exponent == 3


def test_variable_index_out_of_range():
    with pytest.raises(VariableIndexError, match="3"):
        parse("u1*u3", 2)


@pytest.mark.parametrize("src", ["u1*", "u1+(u2", "u1 u2", "2^^3", "u1^u2"])
def test_syntax_errors_report_position(src):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src, 2)
    assert info.value.position >= 0
    assert "position" in str(info.value)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("sin(u1)", 1)
    with pytest.raises(UnknownIdentifierError):
        parse("x1+u1", 1)


def test_precedence():
    assert parse("-u1^2", 1)([3.0]) == -9.0
    assert parse("2*u1^3", 1)([2.0]) == 16.0
    assert parse("u1-u2-u1", 2)([5.0, 1.0]) == -1.0
    assert parse("u1/u2*u2", 2)([3.0, 4.0]) == pytest.approx(3.0)


def test_chained_power_is_rejected():
    with pytest.raises(ExprSyntaxError):
        parse("u1^2^3", 1)


def test_fractional_power_needs_nonnegative_base():
    with pytest.raises(ExprSyntaxError):
        parse("u1^1.5", 1)
    assert parse("abs(u1)^1.5", 1)([4.0]) == pytest.approx(8.0)
    assert parse("(u1^2+u2^2)^0.5", 2)([3.0, 4.0]) == pytest.approx(5.0)


def test_jet_bilinear():
    t = eval_jet(parse("u1*u2", 2), [3.0, 4.0])
    assert t.value == 12.0
    np.testing.assert_array_equal(t.first, [4.0, 3.0])
    np.testing.assert_array_equal(t.second, [[0.0, 1.0], [1.0, 0.0]])


def test_jet_quadratic():
    t = eval_jet(parse("u1^2+u2^2", 2), [1.0, 0.0])
    assert t.value == 1.0
    np.testing.assert_array_equal(t.first, [2.0, 0.0])
    np.testing.assert_array_equal(t.second, 2 * np.eye(2))


def test_jet_random_cubic_matches_central_differences(rng):
    coef = rng.normal(size=(3, 3, 3))
    terms = [f"{float(coef[i, j, k])!r}*u{i + 1}*u{j + 1}*u{k + 1}"
             for i in range(3) for j in range(3) for k in range(3)]
    e = parse("+".join(terms).replace("+-", "-"), 3)
    f = lambda x: e([*x])  # noqa: E731
    h = 1e-4
    for _ in range(20):
        x = rng.normal(size=3)
        t = eval_jet(e, x)
        grad = [(f(x + h * ei) - f(x - h * ei)) / (2 * h) for ei in np.eye(3)]
        np.testing.assert_allclose(t.first, grad, atol=1e-5)
        np.testing.assert_allclose(t.second, fd_hessian(f, x, h), atol=1e-5)


def test_hessian_exactly_symmetric(rng):
    e = parse("u1*u2^2*abs(u3)^2.5 + u3^3/(u1^2+1)", 3)
    for _ in range(10):
        H = np.asarray(eval_jet(e, rng.normal(size=3)).second)
        assert np.max(np.abs(H - H.T)) == 0.0


def test_abs_at_zero_flags_nonsmooth():
    t = eval_jet(parse("abs(u1)+u2", 2), [0.0, 1.0])
    assert t.nonsmooth
    np.testing.assert_array_equal(t.first, [0.0, 1.0])
    # |t|^3 is C^2 at zero
    assert not eval_jet(parse("abs(u1)^3", 1), [0.0]).nonsmooth


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_jet(parse("u1/u2", 2), [1.0, 0.0])
    with pytest.raises(DomainError):
        eval_jet(parse("u1^(-1)", 1), [0.0])


def test_homogeneity_reports():
    assert check_homogeneity(parse("u1*u2", 2), 2.0).passed
    assert check_homogeneity(parse("abs(u1)^3+abs(u2)^3", 2), 3.0).passed
    bad = check_homogeneity(parse("u1^2+u2", 2), 2.0)
    assert not bad.passed and bad.max_violation > 1e-9


def test_chart_grammar_allows_trig_and_pi():
    c = parse_chart_component("cos(2*pi*s1)*sqrt(s2^2)", 2)
    assert c([0.5, -3.0]) == pytest.approx(-3.0)
    with pytest.raises(UnknownIdentifierError):
        parse("cos(u1)", 1)


# -- property tests -----------------------------------------------------------------------
def _exprs(depth: int):
    leaf = st.one_of(
        st.integers(1, 3).map(lambda i: f"u{i}"),
        st.floats(0.25, 4.0).map(lambda c: repr(round(c, 3))),
    )
    if depth == 0:
        return leaf
    sub = _exprs(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(sub, st.sampled_from(["+", "-", "*"]), sub).map(lambda t: f"({t[0]}){t[1]}({t[2]})"),
        sub.map(lambda s: f"abs({s})^3"),
        st.tuples(sub, st.integers(2, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        sub.map(lambda s: f"-({s})"),
    )


@settings(max_examples=100, deadline=None)
@given(_exprs(3))
def test_print_parse_round_trip(src):
    e = parse(src, 3)
    again = parse(e.to_source(), 3)
    assert again.ast == e.ast


@settings(max_examples=100, deadline=None)
@given(_exprs(2), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_gradient_matches_finite_differences(src, x):
    e = parse(src, 3)
    x = np.array(x)
    t = eval_jet(e, x)
    if t.nonsmooth:
        return
    h = 1e-5
    fd = np.array([(e([*(x + h * ei)]) - e([*(x - h * ei)])) / (2 * h) for ei in np.eye(3)])
    scale = 1.0 + abs(t.value) + np.max(np.abs(fd))
    assert np.max(np.abs(t.first - fd)) <= 1e-6 * scale
