import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_averaging import ConfigurationError, Jet, ScalarField, jet_eval, seed
from poisson_averaging import jets as J


def _fd(f, x, i, h=1e-6):
    xp = list(x)
    xm = list(x)
    xp[i] += h
    xm[i] -= h
    return (f(xp) - f(xm)) / (2 * h)


def test_square():
    f = ScalarField(lambda x: x[0] ** 2, 1)
    out = jet_eval(f, seed([2.0]))
    assert out.value == 4.0
    assert list(out.partials) == [4.0]


def test_constant_field_has_zero_partials():
    f = ScalarField.constant(3.5, 2)
    out = jet_eval(f, seed([1.0, -2.0]))
    assert out.value == 3.5
    assert list(out.partials) == [0.0, 0.0]


def test_product_matches_finite_differences():
    f = ScalarField(lambda x: x[0] * x[1], 2)
    out = jet_eval(f, seed([3.0, 5.0]))
    assert list(out.partials) == [5.0, 3.0]
    plain = lambda x: x[0] * x[1]
    for i in range(2):
        assert abs(out.partials[i] - _fd(plain, [3.0, 5.0], i)) < 1e-8


def test_arity_mismatch():
    f = ScalarField(lambda x: x[0], 1)
    with pytest.raises(ConfigurationError):
        jet_eval(f, seed([1.0, 2.0]))


def test_nonuniform_seed_counts():
    f = ScalarField(lambda x: x[0] + x[1], 2)
    with pytest.raises(ConfigurationError):
        jet_eval(f, [Jet(1.0, [1.0]), Jet(2.0, [0.0, 1.0])])


def test_elementary_functions():
    x = seed([0.7])[0]
    for fn, ref, dref in [
        (J.sqrt, math.sqrt, lambda v: 0.5 / math.sqrt(v)),
        (J.exp, math.exp, math.exp),
        (J.log, math.log, lambda v: 1 / v),
        (J.sin, math.sin, math.cos),
        (J.cos, math.cos, lambda v: -math.sin(v)),
    ]:
        out = fn(x)
        assert out.value == pytest.approx(ref(0.7), abs=1e-15)
        assert out.partials[0] == pytest.approx(dref(0.7), abs=1e-15)


def test_quotient_and_powers():
    x, y = seed([1.5, -0.5])
    out = (x ** 3) / (1 + y * y) + 2.0 ** x
    plain = lambda v: v[0] ** 3 / (1 + v[1] ** 2) + 2.0 ** v[0]
    for i in range(2):
        assert out.partials[i] == pytest.approx(_fd(plain, [1.5, -0.5], i), rel=1e-8)


def test_nested_jets_give_second_derivatives():
    # f = x^2 y, d2f/dxdy = 2x
    inner = seed([1.3, 0.4])
    outer = [Jet(v, [1.0 if k == i else 0.0 for k in range(2)]) for i, v in enumerate(inner)]
    f = outer[0] ** 2 * outer[1]
    dfdx = f.partials[0]  # inner jet
    assert dfdx.value == pytest.approx(2 * 1.3 * 0.4)
    assert dfdx.partials[1] == pytest.approx(2 * 1.3)
    assert dfdx.partials[0] == pytest.approx(2 * 0.4)


def test_array_values_broadcast():
    xs = np.linspace(-1, 1, 5)
    x = seed([xs])[0]
    out = x * x + np.ones(5)
    np.testing.assert_allclose(out.value, xs ** 2 + 1)
    np.testing.assert_allclose(out.partials[0], 2 * xs)


_coef = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(
    a=_coef, b=_coef, c=_coef,
    x=st.floats(-1.5, 1.5), y=st.floats(-1.5, 1.5), z=st.floats(0.1, 2.0),
)
def test_random_expression_vs_finite_differences(a, b, c, x, y, z):
    def f(v, lib=np):
        return a * v[0] ** 2 * v[1] + b * lib.sin(v[1] * v[2]) + c * lib.sqrt(v[2]) / (1 + v[0] ** 2)

    out = f(seed([x, y, z]), lib=J)
    for i in range(3):
        ref = _fd(lambda v: f(v), [x, y, z], i)
        assert abs(out.partials[i] - ref) <= 1e-6 * max(1.0, abs(ref))


@settings(max_examples=50, deadline=None)
@given(a=_coef, b=_coef, c=_coef)
def test_value_component_matches_real_arithmetic(a, b, c):
    ja, jb, jc = seed([a, b, c])
    assert ((ja + jb) + jc).value == (a + b) + c
    assert (ja * jb).value == (jb * ja).value == a * b
    assert (ja * (jb + jc)).value == a * (b + c)
