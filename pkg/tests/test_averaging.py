import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from poisson_averaging import (
    AveragedMap,
    ConfigurationError,
    QuadratureConfig,
    QuadratureError,
    SearchBox,
    find_zeros,
    make_duffing,
    make_harmonic_potential,
    make_zero_hopf,
)
from poisson_averaging.averaging import ORDER2_GATE_TOL, fourier_antiderivative, theta_moment

# degenerate first order: c020 = c002 = 0, a101 = -b011, a200 = 2 c101, b011 = c110 = 1
DEGENERATE_F = [{"2 0 0": 1.0, "1 0 1": -1.0}, {"0 1 1": 1.0}, {"1 1 0": 1.0, "1 0 1": 0.5}]


def nodes(N):
    return 2 * np.pi * np.arange(N) / N


# Fourier antiderivative ------------------------------------------------------------


def test_antiderivative_of_cosine():
    th = nodes(32)
    per, mean = fourier_antiderivative(np.cos(th))
    np.testing.assert_allclose(per, np.sin(th), atol=1e-14)
    assert abs(mean) < 1e-15


def test_antiderivative_of_constant():
    th = nodes(16)
    per, mean = fourier_antiderivative(np.ones(16))
    assert mean == pytest.approx(1.0)
    np.testing.assert_allclose(per + mean * th, th, atol=1e-14)


def test_antiderivative_random_trig_poly_vs_sympy(rng):
    t = sympy.symbols("t")
    a = rng.standard_normal(11)
    b = rng.standard_normal(11)
    f = a[0] + sum(a[k] * sympy.cos(k * t) + b[k] * sympy.sin(k * t) for k in range(1, 11))
    F = sympy.lambdify(t, sympy.integrate(f, (t, 0, t)), "numpy")
    fn = sympy.lambdify(t, f, "numpy")
    th = nodes(64)
    per, mean = fourier_antiderivative(fn(th))
    assert np.max(np.abs(per + mean * th - F(th))) <= 1e-12


def test_theta_moment():
    th = nodes(64)
    # (1/2pi) int theta sin(theta) = -1 ; (1/2pi) int theta = pi
    assert theta_moment(np.sin(th)) == pytest.approx(-1.0, abs=1e-13)
    assert theta_moment(np.ones(64)) == pytest.approx(math.pi, abs=1e-13)


def test_inner_antiderivative_vs_adaptive_quadrature(harmonic, harmonic_map):
    F = harmonic_map.inner_antiderivative(0.7, [0.2])
    for theta in (0.3, 2.0, 5.5):
        for i in range(2):
            ref = quad(lambda s: harmonic.sf.G(s, 0.7, [0.2])[i], 0, theta, epsabs=1e-13, epsrel=1e-13)[0]
            assert F(theta)[i] == pytest.approx(ref, abs=1e-11)


# first-order average ----------------------------------------------------------------------


def test_gbar0_oracle_value(harmonic_map):
    np.testing.assert_allclose(harmonic_map.gbar0(1.0, [0.0]), [-0.375, -0.5], atol=1e-12)


def test_gbar0_closed_form(harmonic, harmonic_map):
    r, z = np.meshgrid(np.linspace(0.2, 2, 5), np.linspace(-0.5, 2, 5))
    ref = harmonic.closed_forms["gbar0"](r, z, "square_of_sum")
    assert np.max(np.abs(harmonic_map.gbar0(r, [z]) - ref)) <= 1e-8


@pytest.mark.parametrize("make", [make_harmonic_potential, make_zero_hopf, make_duffing])
def test_zero_perturbation(make):
    amap = AveragedMap(make().sf)
    r = np.array([0.2, 0.5, 0.9])
    z = np.array([-0.1, 0.0, 0.3])
    np.testing.assert_array_equal(amap.gbar0(r, [z]), 0.0)
    _, D = amap.gbar0_jacobian(r, [z])
    np.testing.assert_array_equal(D, 0.0)
    np.testing.assert_array_equal(amap.rho_bar(r, [z]), 0.0)


def test_parity_vanishing(rng):
    sc = make_zero_hopf({"1": 1.0}, [{"0 1 1": 1.0}, {}, {}])
    assert sc.closed_forms["parity_vanishing"]
    amap = AveragedMap(sc.sf)
    r = rng.uniform(0.05, 2, 20)
    z = rng.uniform(-2, 2, 20)
    assert np.max(np.abs(amap.gbar0(r, [z]))) <= 1e-10


def _fd(amap, r, z, h=1e-5):
    cols = []
    for dr, dz in ((h, 0), (0, h)):
        cols.append((amap.gbar0(r + dr, [z + dz]) - amap.gbar0(r - dr, [z - dz])) / (2 * h))
    return np.stack(cols, -1)


def test_jacobian_at_oracle_zero(harmonic_map):
    _, D = harmonic_map.gbar0_jacobian(0.5, [-0.5])
    assert np.max(np.abs(D - _fd(harmonic_map, 0.5, -0.5))) <= 1e-6


def test_jacobian_at_cubic_zeros(cubic, cubic_map):
    for r0, _, z0 in cubic.closed_forms["zeros"]():
        _, D = cubic_map.gbar0_jacobian(r0, [z0])
        assert np.max(np.abs(D - _fd(cubic_map, r0, z0))) <= 1e-6


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.1, 2.0), z=st.floats(-0.6, 2.0))
def test_jacobian_vs_finite_differences(harmonic_map, r, z):
    _, D = harmonic_map.gbar0_jacobian(r, [z])
    fd = _fd(harmonic_map, r, z)
    assert np.max(np.abs(D - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


def test_doubling_changes_little(harmonic_map, cubic_map):
    r = np.array([0.3, 0.8, 1.7])
    z = np.array([-0.6, 0.1, 1.5])
    for amap in (harmonic_map, cubic_map):
        assert np.max(np.abs(amap.gbar0(r, [z]) - amap.doubled().gbar0(r, [z]))) < amap.config.tol


def test_deterministic(harmonic_map):
    r = np.linspace(0.2, 1.5, 7)
    a = harmonic_map.gbar0(r, [r - 0.5])
    b = harmonic_map.gbar0(r, [r - 0.5])
    assert a.tobytes() == b.tobytes()


def test_quadrature_error_reports_delta(harmonic):
    amap = AveragedMap(harmonic.sf, QuadratureConfig(nodes=8, tol=1e-15, max_doublings=1))
    with pytest.raises(QuadratureError) as info:
        amap.gbar0(0.5, [-0.9])
    assert info.value.delta > 0


def test_non_strict_gives_nan(harmonic):
    amap = AveragedMap(harmonic.sf, QuadratureConfig(nodes=8, tol=1e-15, max_doublings=1))
    g = amap.gbar0(np.array([0.5]), [np.array([-0.9])], strict=False)
    assert np.all(np.isnan(g))


@pytest.mark.parametrize("kw", [{"nodes": 12}, {"nodes": 4}, {"tol": 0.0}, {"max_doublings": -1}])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        QuadratureConfig(**kw)


def test_order_validation(harmonic):
    with pytest.raises(ConfigurationError):
        AveragedMap(harmonic.sf, order=3)


def test_zero_hopf_structure(cubic, cubic_map):
    r, z = (a.ravel() for a in np.meshgrid(np.linspace(0.2, 1.8, 5), np.linspace(-2, 1, 5)))
    g = cubic_map.gbar0(r, [z])
    A, B = cubic.closed_forms["AB"](r, z)
    assert np.max(np.abs(g[0] - A)) <= 1e-9
    assert np.max(np.abs(g[1] - 2 * r * g[0] - B)) <= 1e-9


# second order ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def degenerate():
    return make_harmonic_potential(None, DEGENERATE_F)


def test_order2_gate(degenerate, harmonic):
    rep = AveragedMap(degenerate.sf, order=2).check_order2_gate((0.2, 2.0), [(-0.5, 2.0)])
    assert rep["passed"] and rep["threshold"] == ORDER2_GATE_TOL
    rep = AveragedMap(harmonic.sf, order=2).check_order2_gate((0.2, 2.0), [(-0.5, 2.0)])
    assert not rep["passed"]


def test_rho_bar_closed_form(degenerate, rng):
    amap = AveragedMap(degenerate.sf, order=2)
    r = rng.uniform(0.1, 2.0, 12)
    z = rng.uniform(-0.6, 2.0, 12)
    rb = amap.rho_bar(r, [z])
    assert np.max(np.abs(rb - degenerate.closed_forms["rho_bar"](r, z))) <= 1e-8
    second = -z * r**2 * (1 + z) ** 2 / (2 * (1 + z) ** 5)
    assert np.max(np.abs(rb[1] - second)) <= 1e-8


def test_rho_bar_has_no_zeros(degenerate):
    amap = AveragedMap(degenerate.sf, order=2)
    rep = find_zeros(amap, SearchBox.square((0.05, 3.0), (-0.9, 3.0), 9))
    assert rep.metadata["status"] == "ok"
    assert rep.simple_zeros == []


def test_rho_bar_jacobian_vs_finite_differences(degenerate):
    amap = AveragedMap(degenerate.sf, order=2)
    _, D = amap.rho_bar_jacobian(0.7, [0.4])
    h = 1e-4
    dr = (amap.rho_bar(0.7 + h, [0.4]) - amap.rho_bar(0.7 - h, [0.4])) / (2 * h)
    dz = (amap.rho_bar(0.7, [0.4 + h]) - amap.rho_bar(0.7, [0.4 - h])) / (2 * h)
    np.testing.assert_allclose(D, np.stack([dr, dz], -1), atol=1e-6)
