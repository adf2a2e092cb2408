"""Acceptance suite.  Each test prints one PASS/FAIL line, even under capture.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import copy
import math

import numpy as np
import pytest

from conftest import CUBIC_ORACLE_F, HARMONIC_ORACLE_F
from poisson_averaging import (
    AveragedMap,
    IntegratorConfig,
    SearchBox,
    SparsePoly,
    chart_checks,
    continuation_in_epsilon,
    dopri45,
    find_zeros,
    local_small_amplitude_scan,
    make_duffing,
    make_harmonic_potential,
    make_zero_hopf,
    poincare_shoot,
)
from poisson_averaging import cli
from poisson_averaging.jets import primal
from poisson_averaging.reduction import reduced_unperturbed_field, sample_domain

BOX = SearchBox.square((0.05, 3.0), (-0.9, 3.0), 13)
DEGENERATE_F = [{"2 0 0": 1.0, "1 0 1": -1.0}, {"0 1 1": 1.0}, {"1 1 0": 1.0, "1 0 1": 0.5}]


@pytest.fixture
def report(capsys):
    def emit(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{'ok' if p else 'FAILED'} {text}" for text, p in checks)
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        return ok

    return emit


def test_criterion_1_oracle_zero(report):
    sc = make_harmonic_potential(None, HARMONIC_ORACLE_F)
    zs = find_zeros(AveragedMap(sc.sf), BOX).simple_zeros
    err = float(np.max(np.abs(zs[0].point - [0.5, -0.5]))) if len(zs) == 1 else math.inf
    ok = report(1, "single simple zero at (0.5, -0.5)", [
        (f"count={len(zs)}", len(zs) == 1),
        (f"error={err:.2e} <= 1e-8", err <= 1e-8),
    ])
    assert ok


def test_criterion_2_orbit_distance_slope(report):
    sc = make_harmonic_potential(None, HARMONIC_ORACLE_F)
    table = continuation_in_epsilon(sc.sf, [0.5, -0.5], [1e-2, 1e-3, 1e-4])
    statuses = [r.status for r in table.rows]
    dists = ", ".join(f"{r.distance:.3e}" for r in table.rows)
    slope = table.slope if table.slope is not None else math.nan
    ok = report(2, "shooting distance shrinks linearly in eps", [
        (f"statuses={statuses}", statuses == ["isolated"] * 3),
        (f"distances=[{dists}] slope={slope:.4f} in [0.7, 1.3]", abs(slope - 1.0) <= 0.3),
    ])
    assert ok


def _homogeneous_draws(degree, count, seed):
    rng = np.random.default_rng(seed)
    keys = [f"{i} {j} {degree - i - j}" for i in range(degree + 1) for j in range(degree + 1 - i)]
    return [[{k: float(rng.standard_normal()) for k in keys} for _ in range(3)] for _ in range(count)]


def test_criterion_3_homogeneous_no_zeros(report):
    checks = []
    for degree in (2, 3):
        found = []
        for F in _homogeneous_draws(degree, 10, 20240 + degree):
            rep = find_zeros(AveragedMap(make_zero_hopf({"1": 1.0}, F).sf), BOX)
            found.append(len([z for z in rep.simple_zeros if z.r > 1e-3]))
        checks.append((f"degree {degree}: simple zeros per draw {found}", sum(found) == 0))
    assert report(3, "homogeneous zero-Hopf perturbations have m = 0", checks)


def test_criterion_4_cubic_oracle(report):
    sc = make_zero_hopf({"1": 1.0}, CUBIC_ORACLE_F)
    zs = find_zeros(AveragedMap(sc.sf), BOX).simple_zeros
    rw = sorted((z.r, z.z[0] - z.r**2) for z in zs)
    expected = [(0.618034, -0.381966), (1.618034, -2.618034)]
    err = float(np.max(np.abs(np.array(rw) - expected))) if len(rw) == 2 else math.inf
    checks = [(f"count={len(rw)}", len(rw) == 2), (f"(r, w) error={err:.1e} <= 1e-6", err <= 1e-6)]
    for c021, label in ((2.0, "discriminant < 0"), (4.0, "double root")):
        F = copy.deepcopy(CUBIC_ORACLE_F)
        F[2]["0 2 1"] = c021
        n = len(find_zeros(AveragedMap(make_zero_hopf({"1": 1.0}, F).sf), BOX).simple_zeros)
        checks.append((f"{label} (c021={c021}): count={n}", n == 0))
    assert report(4, "cubic zero-Hopf oracle", checks)


def test_criterion_5_duffing(report):
    sc = make_duffing([{"0 0 3": 1.0}, {}, {}])
    scan = local_small_amplitude_scan(AveragedMap(sc.sf), leading_powers=sc.leading_powers)
    g1, g2 = scan.ghat_origin
    statuses = set()
    for r in (0.05, 0.1, 0.2, 0.3):
        for z in (-0.3, 0.0, 0.3):
            statuses.add(poincare_shoot(sc.sf, 1e-3, [r, z]).status)
    ok = report(5, "Duffing with F = (x3^3, 0, 0)", [
        (f"ghat1(0,0)={g1:.6f} vs -0.375 (tol 1e-4)", abs(g1 + 0.375) <= 1e-4),
        (f"ghat2(0,0)={g2:.1e} vs 0 (tol 1e-6)", abs(g2) <= 1e-6),
        (f"shoot statuses {sorted(statuses)} contain no isolated orbit", "isolated" not in statuses),
    ])
    assert ok


def test_criterion_6_zero_hopf_structure(report):
    sc = make_zero_hopf({"1": 1.0}, CUBIC_ORACLE_F)
    P = SparsePoly.from_json({"1": 1.0}, 1)
    dP = P.derivative(0)
    F = [SparsePoly.from_json(c, 3) for c in CUBIC_ORACLE_F]
    th = 2 * np.pi * np.arange(256) / 256
    worst = 0.0
    amap = AveragedMap(sc.sf)
    for r in np.linspace(0.2, 2.0, 5):
        for z in np.linspace(-2.0, 1.0, 5):
            x = [r * np.cos(th), r * np.sin(th), np.full_like(th, z - P([r * r]))]
            A = -np.mean(F[0](x) * np.cos(th) + F[1](x) * np.sin(th))
            B = -np.mean(F[2](x) * np.ones_like(th))
            g = amap.gbar0(r, [z])
            ref = np.array([A, B + 2 * r * dP([r * r]) * A])
            worst = max(worst, float(np.max(np.abs(g - ref))))
    assert report(6, "gbar0 = (A, B + 2 r P'(r^2) A)", [(f"max residual={worst:.1e} <= 1e-9", worst <= 1e-9)])


def test_criterion_7_reduction_invariants(report):
    scenarios = {
        "harmonic_potential": make_harmonic_potential(None, HARMONIC_ORACLE_F),
        "zero_hopf": make_zero_hopf({"1": 1.0}, CUBIC_ORACLE_F),
        "duffing": make_duffing([{"0 0 3": 1.0}, {}, {}]),
    }
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
    checks = []
    for name, sc in scenarios.items():
        cc = chart_checks(sc.chart, 100)
        drift = 0.0
        for x0 in sample_domain(sc.chart, 5, seed_value=7) * 0.5:
            y0 = np.array([float(primal(v)) for v in sc.chart.forward(list(x0))])
            sol = dopri45(lambda t, y: reduced_unperturbed_field(sc.chart, y), 0.0, 2 * np.pi, y0, cfg)
            H = 0.5 * (sol.y[:, 0] ** 2 + sol.y[:, 1] ** 2)
            drift = max(drift, float(np.max(np.abs(H - H[0]))))
        checks += [
            (f"{name} round trip {cc.round_trip_x:.1e}", cc.round_trip_x <= 1e-10),
            (f"{name} |DPhi(0) - I| {cc.dphi0_identity:.1e}", cc.dphi0_identity <= 1e-12),
            (f"{name} H* drift {drift:.1e}", drift <= 1e-9),
        ]
    assert report(7, "chart round trip, DPhi(0) and H* conservation", checks)


def test_criterion_8_parity_and_second_order(report, rng):
    parity = make_zero_hopf({"1": 1.0}, [{"0 1 1": 1.0}, {}, {}])
    amap = AveragedMap(parity.sf)
    r = rng.uniform(0.05, 2.0, 20)
    z = rng.uniform(-2.0, 2.0, 20)
    sup = float(np.max(np.abs(amap.gbar0(r, [z]))))
    gate = AveragedMap(parity.sf, order=2).check_order2_gate((0.05, 2.0), [(-2.0, 2.0)])
    degenerate = make_harmonic_potential(None, DEGENERATE_F)
    amap2 = AveragedMap(degenerate.sf, order=2)
    gate2 = amap2.check_order2_gate((0.2, 2.0), [(-0.5, 2.0)])
    r = rng.uniform(0.1, 2.0, 20)
    z = rng.uniform(-0.6, 2.0, 20)
    err = float(np.max(np.abs(amap2.rho_bar(r, [z]) - degenerate.closed_forms["rho_bar"](r, z))))
    ok = report(8, "parity vanishing and second-order average", [
        (f"|gbar0| on 20 probes {sup:.1e} <= 1e-10", sup <= 1e-10),
        ("order-2 gate passes for the parity case", gate["passed"]),
        ("order-2 gate passes for the degenerate configuration", gate2["passed"]),
        (f"rho_bar error {err:.1e} <= 1e-8", err <= 1e-8),
    ])
    assert ok


def test_criterion_9_determinism(report):
    cfg = cli.resolve_config({
        "scenario": {"name": "harmonic_potential", "parameters": {"F": HARMONIC_ORACLE_F}},
        "epsilon": 1e-3,
    })
    a = cli.dumps(cli.cmd_analyze(copy.deepcopy(cfg)))
    b = cli.dumps(cli.cmd_analyze(copy.deepcopy(cfg)))
    assert report(9, "analyze output is byte-identical", [(f"{len(a)} bytes, identical={a == b}", a == b)])
