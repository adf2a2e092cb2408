import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from poisson_averaging import (
    ConfigurationError,
    DomainError,
    IntegrationError,
    IntegratorConfig,
    continuation_in_epsilon,
    integrate_standard_form,
    make_duffing,
    make_harmonic_potential,
    map_orbit_back,
    poincare_shoot,
)
from poisson_averaging.jets import primal, seed
from poisson_averaging.poisson import hamiltonian, structure_matrix

EPS = 1e-3


def x_field(sc, eps):
    ham = hamiltonian(sc.spec)

    def f(t, x):
        gH = np.array([float(p) for p in ham(seed(list(x))).partials])
        F = np.array([float(primal(c)) for c in sc.perturbed.F(list(x) + [eps])])
        return structure_matrix(sc.spec, x) @ gH + eps * F

    return f


@pytest.fixture(scope="module")
def oracle_cert(harmonic):
    return poincare_shoot(harmonic.sf, EPS, [0.5, -0.5], orbit_samples=65)


def test_unperturbed_flow_is_constant(harmonic):
    tr = integrate_standard_form(harmonic.sf, [0.7, 0.2], 0.0)
    np.testing.assert_array_equal(tr.states, np.tile([0.7, 0.2], (len(tr.theta), 1)))


def test_unperturbed_return_map_is_identity(harmonic):
    tr = integrate_standard_form(harmonic.sf, [0.7, 0.2], 0.0, variational=True)
    np.testing.assert_array_equal(tr.monodromy, np.eye(2))


def test_small_eps_endpoint_stays_close(harmonic):
    tr = integrate_standard_form(harmonic.sf, [0.5, -0.5], EPS)
    assert np.max(np.abs(tr.end - [0.5, -0.5])) <= 5e-3


def test_start_validation(harmonic):
    with pytest.raises(ConfigurationError):
        integrate_standard_form(harmonic.sf, [0.5], EPS)
    with pytest.raises(IntegrationError):
        integrate_standard_form(harmonic.sf, [-0.1, 0.0], EPS)


def test_time_requires_flag(harmonic):
    tr = integrate_standard_form(harmonic.sf, [0.5, -0.5], EPS)
    with pytest.raises(ConfigurationError):
        tr.time_at(1.0)


def test_oracle_fixed_point(oracle_cert):
    assert oracle_cert.status == "isolated"
    assert oracle_cert.residual <= 1e-9
    assert oracle_cert.distance <= 0.05
    np.testing.assert_allclose(oracle_cert.fixed_point, [0.5, -0.5], atol=1e-4)


def test_perturbed_guess_same_fixed_point(harmonic, oracle_cert):
    other = poincare_shoot(harmonic.sf, EPS, [0.501, -0.499])
    assert other.status == "isolated"
    assert np.max(np.abs(other.fixed_point - oracle_cert.fixed_point)) <= 1e-7


def test_multipliers_match_stable_label(oracle_cert):
    # stable zero of the average: both Floquet multipliers inside the unit circle
    assert np.all(np.abs(oracle_cert.multipliers) < 1.0)


def test_monodromy_vs_finite_differences(harmonic, oracle_cert):
    v = oracle_cert.fixed_point
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
    h = 1e-5
    cols = []
    for k in range(2):
        d = np.zeros(2)
        d[k] = h
        a = integrate_standard_form(harmonic.sf, v + d, EPS, config=cfg).end
        b = integrate_standard_form(harmonic.sf, v - d, EPS, config=cfg).end
        cols.append((a - b) / (2 * h))
    np.testing.assert_allclose(oracle_cert.monodromy, np.stack(cols, -1), atol=1e-7)


def test_orbit_closes_in_original_coordinates(harmonic, oracle_cert):
    x = oracle_cert.orbit_x
    assert x.shape == (65, 3)
    assert np.max(np.abs(x[-1] - x[0])) <= 1e-8
    T = oracle_cert.period_t
    ref = solve_ivp(x_field(harmonic, EPS), (0.0, T), x[0], method="DOP853", rtol=1e-12, atol=1e-13)
    end = ref.y[:, -1]
    assert np.max(np.abs(end - x[0])) <= 1e-6 * np.max(np.abs(x[0]))


def test_certificate_serializes(oracle_cert):
    d = oracle_cert.to_dict(include_orbit=True)
    assert d["status"] == "isolated"
    assert len(d["multipliers"]) == 2 and len(d["orbit_x"]) == 65


def test_zero_perturbation_is_degenerate_family():
    sc = make_harmonic_potential()
    cert = poincare_shoot(sc.sf, EPS, [0.5, 0.1])
    assert cert.status == "degenerate_family"
    assert not cert.converged


def test_continuation_flags_zero_perturbation():
    sc = make_harmonic_potential()
    table = continuation_in_epsilon(sc.sf, [0.5, 0.1], [4e-3, 2e-3, 1e-3])
    assert table.flagged
    assert table.slope is None


@pytest.mark.parametrize("which", [0, 1])
def test_continuation_cubic_zeros(cubic, which):
    r, _, z = cubic.closed_forms["zeros"]()[which]
    table = continuation_in_epsilon(cubic.sf, [r, z], [4e-3, 2e-3, 1e-3])
    assert not table.flagged
    assert [row.status for row in table.rows] == ["isolated"] * 3
    assert table.slope > 0
    dists = [row.distance for row in table.rows]
    assert dists == sorted(dists, reverse=True)


@pytest.mark.parametrize("eps", [[], [1e-3, 2e-3], [1e-3, 0.0]])
def test_continuation_validation(harmonic, eps):
    with pytest.raises(ConfigurationError):
        continuation_in_epsilon(harmonic.sf, [0.5, -0.5], eps)


def test_duffing_has_no_isolated_orbit():
    sc = make_duffing([{"0 0 3": 1.0}, {}, {}])
    statuses = set()
    for r in (0.2, 0.5):
        for z in (-0.2, 0.3):
            statuses.add(poincare_shoot(sc.sf, 1e-2, [r, z]).status)
    assert "isolated" not in statuses


# mapping back ------------------------------------------------------------------------------


def test_map_back_identity_chart(harmonic):
    orb = map_orbit_back(harmonic.chart, np.array([[0.0, 1.0, 0.0]]))
    np.testing.assert_allclose(orb.x[0], [1.0, 0.0, 0.0], atol=1e-14)


def test_map_back_duffing():
    sc = make_duffing()
    orb = map_orbit_back(sc.chart, np.array([[0.0, math.sqrt(2.0), 2.0]]))
    np.testing.assert_allclose(orb.x[0], [1.0, 0.0, 2.0], atol=1e-12)


def test_map_back_rejects_points_outside_domain():
    sc = make_duffing()
    rows = np.array([[0.0, 0.5, 0.0], [0.0, math.sqrt(2.0), -2.0]])
    with pytest.raises(DomainError, match="sample 1"):
        map_orbit_back(sc.chart, rows)


def test_map_back_checks_width(harmonic):
    with pytest.raises(ConfigurationError):
        map_orbit_back(harmonic.chart, np.array([[0.0, 1.0]]))
