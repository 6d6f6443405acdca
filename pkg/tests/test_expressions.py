import numpy as np
import pytest

from slidim.dmath import Dual
from slidim.errors import (ExpressionSyntaxError, NonFinite, UnknownIdentifier)
from slidim.expressions import (SwitchingFunction, parse_expr, parse_field)


def test_parse_basic_arithmetic():
    e = parse_expr("a*x - b*y", {"a": 1, "b": 2})
    assert e(3.0, 1.0, 0.0) == 1.0


def test_parse_power_and_builtin():
    assert parse_expr("x^2 + sin(0)")(2.0, 0.0, 0.0) == 4.0


def test_unbalanced_paren_offset():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse_expr("x*(")
    assert err.value.offset == 3


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as err:
        parse_expr("x + w")
    assert err.value.name == "w"


def test_operator_precedence():
    e = parse_expr("2 + 3 * 4 ^ 2 / 8")
    assert e(0.0, 0.0, 0.0) == 2 + 3 * 16 / 8


def test_unary_minus_binds_before_power():
    # the grammar parses -x^2 as (-x)^2
    assert parse_expr("-2^2")(0.0, 0.0, 0.0) == 4.0


def test_whitespace_insignificant():
    a = parse_expr("x + 2*y")(1.0, 3.0, 0.0)
    b = parse_expr("x+2 * y")(1.0, 3.0, 0.0)
    assert a == b == 7.0


@pytest.mark.parametrize("fn,arg,want", [
    ("sin", 0.7, np.sin(0.7)),
    ("cos", 0.7, np.cos(0.7)),
    ("exp", 0.3, np.exp(0.3)),
    ("log", 2.0, np.log(2.0)),
    ("sqrt", 2.0, np.sqrt(2.0)),
    ("tanh", 0.5, np.tanh(0.5)),
])
def test_builtins(fn, arg, want):
    assert parse_expr(f"{fn}(x)")(arg, 0.0, 0.0) == pytest.approx(want, abs=1e-15)


def test_scientific_numbers():
    assert parse_expr("1.5e-3 + .5")(0, 0, 0) == pytest.approx(0.5015)


def test_with_params_rebinds():
    e = parse_expr("a*x", {"a": 1.0})
    assert e.with_params(a=5)(2.0, 0, 0) == 10.0
    with pytest.raises(KeyError):
        e.with_params(zz=1)


def test_field_needs_three_components():
    with pytest.raises(ExpressionSyntaxError):
        parse_field("x, y")
    f = parse_field("x, y, x*y")
    assert np.allclose(f(np.array([2.0, 3.0, 0.0])), [2, 3, 6])


def test_field_commas_respect_parens():
    f = parse_field("x*(1 + 2), y, z")
    assert np.allclose(f(np.array([1.0, 1.0, 1.0])), [3, 1, 1])


def test_vectorized_matches_scalar():
    e = parse_expr("sin(x)*exp(-y) + z^3 / (1 + x^2)")
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(40, 3))
    batch = e(pts[:, 0], pts[:, 1], pts[:, 2])
    single = np.array([e(*p) for p in pts])
    assert np.array_equal(batch, single)


CORPUS = [
    "x^2 + y*z",
    "sin(x)*cos(y) - exp(z/4)",
    "sqrt(1 + x^2 + y^2)",
    "tanh(3*x) + log(2 + z^2)",
    "a*x - b*y + a*b*(z*exp(-z))",
]


@pytest.mark.parametrize("src", CORPUS)
def test_dual_gradient_matches_central_differences(src):
    g = SwitchingFunction(src, {"a": 0.7, "b": 1.3})
    rng = np.random.default_rng(11)
    pts = rng.uniform(-0.8, 0.8, size=(25, 3))
    grad = g.gradient(pts)
    h = 1e-6
    for k in range(3):
        dp = pts.copy()
        dm = pts.copy()
        dp[:, k] += h
        dm[:, k] -= h
        fd = (g(dp) - g(dm)) / (2 * h)
        scale = np.maximum(np.abs(fd), 1.0)
        assert np.max(np.abs(grad[:, k] - fd) / scale) < 1e-6


def test_gradient_of_constant_independent_component():
    g = SwitchingFunction("z")
    u = np.array([4.0, 5.0, 6.0])
    assert np.allclose(g.gradient(u), [0, 0, 1])


def test_nested_duals_give_second_derivative():
    f = parse_expr("x^3")
    seed = Dual(Dual(2.0, (1.0,)), (Dual(1.0, (0.0,)),))
    out = f(seed, 0.0, 0.0)
    assert out.partials[0].partials[0] == pytest.approx(12.0)


def test_eval_checked_raises_nonfinite():
    e = parse_expr("exp(x)")
    with np.errstate(over="ignore"), pytest.raises(NonFinite):
        e.eval_checked(1e4, 0.0, 0.0)


def test_regular_value_check():
    g = SwitchingFunction("z")
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1e-12]])
    assert g.check_regular(pts)
    bad = SwitchingFunction("z^2")  # gradient vanishes on its zero set
    assert not bad.check_regular(np.array([[0.0, 0.0, 0.0]]))
