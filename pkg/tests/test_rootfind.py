import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisson_averaging import (
    AveragedMap,
    ConfigurationError,
    SearchBox,
    Stability,
    classify_stability,
    find_zeros,
    local_small_amplitude_scan,
    make_duffing,
    make_harmonic_potential,
    make_zero_hopf,
)
from poisson_averaging.rootfind import characteristic_polynomial, routh_hurwitz


# stability ------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "J, expected",
    [
        (np.diag([-1.0, -2.0]), Stability.STABLE),
        (np.diag([-1.0, 3.0]), Stability.UNSTABLE),
        (np.array([[0.0, 1.0], [-1.0, 0.0]]), Stability.INDETERMINATE),
        (np.diag([0.0, -1.0]), Stability.INDETERMINATE),
        (np.diag([0.0, 2.0]), Stability.UNSTABLE),
        (np.array([[-1.0, 5.0, 0.0], [-5.0, -1.0, 0.0], [0.0, 0.0, -0.1]]), Stability.STABLE),
    ],
)
def test_classify_examples(J, expected):
    assert classify_stability(J) is expected


@pytest.mark.parametrize(
    "coeffs, rhp, boundary",
    [
        ([1, 3, 3, 1], 0, False),  # (s+1)^3
        ([1, -1, 2], 2, False),
        ([1, 1, 2, 2], 0, True),  # (s+1)(s^2+2): all-zero row
        ([1, 1, 2, 2, 3], 2, False),  # zero first element, epsilon method
        ([1, 2, 1, 0], 0, True),  # root at the origin
        ([1, 0, -1], 1, True),  # +-1: auxiliary polynomial
    ],
)
def test_routh_table(coeffs, rhp, boundary):
    res = routh_hurwitz(coeffs)
    assert res["rhp"] == rhp
    assert res["boundary"] == boundary


def test_characteristic_polynomial_matches_numpy(rng):
    for n in (1, 2, 3, 4, 5):
        A = rng.standard_normal((n, n))
        np.testing.assert_allclose(characteristic_polynomial(A), np.poly(A), atol=1e-12)


def _eig2(A):
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    d = cmath.sqrt(tr * tr / 4 - det)
    return [tr / 2 + d, tr / 2 - d]


def _eig3(A):
    # Cardano on lambda^3 + a lambda^2 + b lambda + c
    a = -np.trace(A)
    b = 0.5 * (np.trace(A) ** 2 - np.trace(A @ A))
    c = -np.linalg.det(A)
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    disc = cmath.sqrt(q * q / 4 + p**3 / 27)
    u = (-q / 2 + disc) ** (1 / 3)
    w = cmath.exp(2j * cmath.pi / 3)
    roots = []
    for k in range(3):
        uk = u * w**k
        vk = -p / (3 * uk) if abs(uk) > 1e-300 else 0.0
        roots.append(uk + vk - a / 3)
    return roots


def _label(eigs):
    re = [e.real for e in eigs]
    if max(re) > 0:
        return Stability.UNSTABLE
    return Stability.STABLE


def test_routh_agrees_with_closed_form_eigenvalues(rng):
    checked = 0
    while checked < 1000:
        n = 2 if checked % 2 else 3
        A = rng.uniform(-2, 2, (n, n))
        eigs = _eig2(A) if n == 2 else _eig3(A)
        if min(abs(e.real) for e in eigs) < 1e-6:
            continue  # too close to the boundary for a sign oracle
        assert classify_stability(A) is _label(eigs), A
        checked += 1


@settings(max_examples=100, deadline=None)
@given(
    entries=st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    c=st.floats(1e-3, 1e3),
)
def test_stability_invariant_under_positive_scaling(entries, c):
    A = np.array(entries).reshape(2, 2)
    eigs = np.linalg.eigvals(A)
    if np.min(np.abs(eigs.real)) < 1e-6 * max(1.0, np.max(np.abs(A))):
        return
    assert classify_stability(c * A) is classify_stability(A)


def test_nonfinite_jacobian_is_indeterminate():
    assert classify_stability(np.array([[np.nan, 0.0], [0.0, -1.0]])) is Stability.INDETERMINATE


# search box ---------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "args",
    [((0.0, 1.0), ((-1, 1),), 5), ((0.5, 0.1), ((-1, 1),), 5), ((0.1, 1.0), ((1, 1),), 5),
     ((0.1, 1.0), ((-1, 1),), 1), ((0.1, 1.0), ((-1, 1),), (3, 3, 3))],
)
def test_search_box_validation(args):
    with pytest.raises(ConfigurationError):
        SearchBox(*args)


def test_search_box_nodes():
    box = SearchBox.square((0.1, 1.0), (-1.0, 1.0), 3)
    pts = box.nodes()
    assert pts.shape == (9, 2)
    assert box.contains(pts).all()


# multistart Newton ------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def oracle_report(harmonic_map):
    return find_zeros(harmonic_map, SearchBox.square((0.05, 3.0), (-0.9, 3.0), 13))


def test_oracle_single_zero(oracle_report):
    zs = oracle_report.simple_zeros
    assert len(zs) == 1
    np.testing.assert_allclose(zs[0].point, [0.5, -0.5], atol=1e-8)
    assert zs[0].stability is Stability.STABLE
    assert zs[0].in_U


def test_report_invariants(oracle_report, cubic_map):
    cubic_report = find_zeros(cubic_map, SearchBox.square((0.05, 2.5), (-4.0, 1.0), 13))
    for rep in (oracle_report, cubic_report):
        pts = np.array([z.point for z in rep.zeros])
        for z in rep.zeros:
            assert z.residual <= 1e-10
            assert z.residual_doubled <= 1e-9
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                assert np.max(np.abs(pts[i] - pts[j])) > 1e-6
    assert len(cubic_report.simple_zeros) == 2


def test_identically_zero_gate():
    amap = AveragedMap(make_harmonic_potential().sf)
    rep = find_zeros(amap, SearchBox.square((0.1, 1.0), (-0.5, 0.5), 5))
    assert rep.zeros == []
    assert rep.metadata["identically_zero"]
    assert rep.metadata["hint"] == "use order 2"


def test_order2_refused_when_first_order_nonzero(harmonic):
    amap = AveragedMap(harmonic.sf, order=2)
    rep = find_zeros(amap, SearchBox.square((0.2, 2.0), (-0.5, 2.0), 5))
    assert rep.zeros == []
    assert not rep.metadata["order2_gate"]["passed"]


def test_homogeneous_quadratic_has_no_zeros():
    amap = AveragedMap(make_zero_hopf({"1": 1.0}, [{"2 0 0": 1.0}, {}, {}]).sf)
    rep = find_zeros(amap, SearchBox.square((0.05, 2.0), (-2.0, 2.0), 9))
    assert [z for z in rep.simple_zeros if z.r > 0] == []


def test_complementary_restrictions_have_no_zeros():
    # c002 / c020 > 0
    sc = make_harmonic_potential(None, [{"1 0 1": 1.0}, {}, {"0 2 0": 1.0, "0 0 2": 1.0}])
    rep = find_zeros(AveragedMap(sc.sf), SearchBox.square((0.05, 3.0), (-0.9, 3.0), 13))
    assert rep.simple_zeros == []


class _Scaled:
    def __init__(self, amap, c):
        self.amap, self.c, self.dim, self.order = amap, c, amap.dim, 1

    def value(self, r, z=()):
        return self.c * self.amap.value(r, z)

    def value_and_jacobian(self, r, z=()):
        g, D = self.amap.value_and_jacobian(r, z)
        return self.c * g, self.c * D


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_scale_coherence(cubic_map, c):
    box = SearchBox.square((0.05, 2.5), (-4.0, 1.0), 13)
    base = find_zeros(cubic_map, box, check_doubled=False)
    scaled = find_zeros(_Scaled(cubic_map, c), box, newton_tol=1e-10 * max(1.0, c), check_doubled=False)
    a = sorted((tuple(np.round(z.point, 7)), z.stability) for z in base.simple_zeros)
    b = sorted((tuple(np.round(z.point, 7)), z.stability) for z in scaled.simple_zeros)
    assert a == b


# behaviour near r = 0 -----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "F, ghat",
    [
        (None, (0.0, 0.0)),
        ([{"3 0 0": 1.0}, {}, {}], (-0.375, 0.0)),
        ([{}, {}, {"2 0 0": 1.0}], (0.0, -0.5)),
    ],
)
def test_local_scan_duffing(F, ghat):
    sc = make_duffing(F)
    rep = local_small_amplitude_scan(AveragedMap(sc.sf), leading_powers=sc.leading_powers)
    np.testing.assert_allclose(rep.ghat_origin, ghat, atol=1e-4)
    assert rep.converged
    if F is None:
        assert rep.zero_count == 0
