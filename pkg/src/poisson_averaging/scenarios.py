"""Built-in scenarios and their closed-form reference formulas.

Three families are provided:

``harmonic_potential``
    ``H = (x1^2 + x2^2 (1 + h(x1, x3))^2) / 2`` with the constant Darboux
    structure; quadratic perturbations have closed-form averaged functions
    when ``h = x3`` and ``c200 = 0``.
``zero_hopf``
    Structure matrix with Casimir ``x3 + P(x1^2 + x2^2)``; the averaged
    function reduces to trigonometric moments of the perturbation.
``duffing``
    The undamped Duffing oscillator embedded in R^3 with the stiffness as a
    Casimir; only the behaviour near the origin is available in closed form.

The closed forms are oracles.  ``cross_check`` compares them with the generic
quadrature pipeline, which is treated as ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .jets import ScalarField, sqrt
from .poisson import PerturbedSpec, PoissonSpec, darboux_matrix, poly_vector_field
from .poly import SparsePoly, poly_partial_at_zero
from .reduction import DarbouxChart, StandardForm, build_chart, standard_form

__all__ = [
    "Scenario",
    "SCENARIO_NAMES",
    "SCENARIO_SCHEMAS",
    "make_harmonic_potential",
    "make_zero_hopf",
    "make_duffing",
    "make_scenario",
    "trig_moment",
    "cross_check",
    "CrossCheckReport",
]

SCENARIO_NAMES = ("harmonic_potential", "zero_hopf", "duffing")


def trig_moment(a: int, b: int) -> float:
    """Exact mean of ``cos^a(t) sin^b(t)`` over one period."""
    if a % 2 or b % 2:
        return 0.0

    def dfact(k):
        return math.prod(range(k, 0, -2)) if k > 0 else 1

    return dfact(a - 1) * dfact(b - 1) / dfact(a + b)


@dataclass
class Scenario:
    name: str
    parameters: dict
    spec: PoissonSpec
    chart: DarbouxChart
    perturbed: PerturbedSpec
    F: tuple
    closed_forms: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    leading_powers: tuple | None = None

    @property
    def sf(self) -> StandardForm:
        return standard_form(self.chart, self.perturbed)

    def coeff(self, comp: int, exps: Sequence[int]) -> float:
        """Coefficient of ``x^exps`` in perturbation component ``comp`` (0-based)."""
        p = self.F[comp]
        exps = tuple(exps)
        if p.arity == len(exps) + 1:
            exps = exps + (0,)
        return p.coeff(exps)


def _parse_F(F, n: int) -> tuple:
    if F is None:
        return tuple(SparsePoly.zero(n) for _ in range(n))
    if isinstance(F, Mapping):
        raise ConfigurationError("F must be a list of polynomials, one per component")
    F = list(F)
    if len(F) != n:
        raise ConfigurationError(f"F must have {n} components, got {len(F)}")
    out = []
    for comp in F:
        if isinstance(comp, SparsePoly):
            out.append(comp)
        else:
            if not isinstance(comp, Mapping):
                raise ConfigurationError("each F component must be an exponent map")
            arity = {len(str(k).split()) for k in comp} or {n}
            ar = arity.pop() if len(arity) == 1 else -1
            if ar not in (n, n + 1):
                raise ConfigurationError(
                    f"perturbation exponent keys must have {n} (or {n + 1} with eps) entries"
                )
            out.append(SparsePoly.from_json(comp, ar))
    for k, p in enumerate(out, start=1):
        for exps in p.terms:
            if sum(exps[:n]) < 2:
                raise ConfigurationError(
                    f"F_{k} has a constant or linear term {exps}; perturbations must be O(|x|^2)"
                )
    return tuple(out)


def _poly_from(obj, arity, what) -> SparsePoly:
    if isinstance(obj, SparsePoly):
        if obj.arity != arity:
            raise ConfigurationError(f"{what} must have arity {arity}")
        return obj
    if obj is None:
        raise ConfigurationError(f"{what} is required")
    return SparsePoly.from_json(obj, arity)


def _F_json(F) -> list:
    return [p.to_json() for p in F]


# ---------------------------------------------------------------------------
# harmonic oscillator with a potential


def make_harmonic_potential(h=None, F=None) -> Scenario:
    """``h`` is a polynomial in ``(x1, x3)`` without constant term (default ``x3``)."""
    h = _poly_from(h if h is not None else {"0 1": 1.0}, 2, "h")
    if h.coeff((0, 0)) != 0.0:
        raise ConfigurationError("h must vanish at the origin (no constant term)")
    F = _parse_F(F, 3)

    def h_of(x):
        return h([x[0], x[2]])

    one = ScalarField.constant(1.0, 3)
    h2 = ScalarField(lambda x: 1.0 + h_of(x), 3, name="h2")
    spec = PoissonSpec(
        n=3,
        J0=lambda x: [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        I=one,
        h=(one, h2),
        phi=(ScalarField.constant(0.0, 3),),
        domain_hint=np.array([[-1.0, 1.0], [-1.0, 1.0], [-0.5, 1.0]]),
    )

    def inverse(y):
        return [y[0], y[1] / (1.0 + h([y[0], y[2]])), y[2]]

    def predicate(x):
        return 1.0 + h([x[0], x[2]]) > 0.0

    chart = build_chart(spec, inverse, predicate, name="harmonic_potential")
    perturbed = PerturbedSpec(spec, poly_vector_field(F, 3), 0.0)
    sc = Scenario(
        "harmonic_potential",
        {"h": h.to_json(), "F": _F_json(F)},
        spec,
        chart,
        perturbed,
        F,
    )
    _harmonic_closed_forms(sc, h)
    return sc


def _harmonic_closed_forms(sc: Scenario, h: SparsePoly) -> None:
    quad = all(p.arity == 3 and (not p.terms or (p.is_homogeneous() and p.degree == 2)) for p in sc.F)
    if h != SparsePoly({(0, 1): 1.0}, 2) or not quad or sc.coeff(2, (2, 0, 0)) != 0.0:
        sc.notes.append("closed forms need h = x3, c200 = 0 and homogeneous quadratic F")
        return
    a101 = sc.coeff(0, (1, 0, 1))
    b011 = sc.coeff(1, (0, 1, 1))
    c020 = sc.coeff(2, (0, 2, 0))
    c002 = sc.coeff(2, (0, 0, 2))
    s = a101 + b011
    k = 2.0 * s

    def gbar0(r, z, reading="square_of_sum"):
        zz = (1 + z) ** 2 if reading == "square_of_sum" else 1 + z**2
        g1 = -r * (3 * c020 * r**2 + 4 * z * zz * (s + (s + c002) * z)) / (8 * (1 + z) ** 4)
        g2 = -(c020 * r**2 + 2 * c002 * z**2 * (1 + z) ** 2) / (2 * (1 + z) ** 3)
        return np.array([g1, g2])

    def resultant(z):
        return -8 * c002 * c020**2 * z**4 * (1 + z) ** 6 * (c002 * z - 2 * a101 * (1 + z) - 2 * b011 * (1 + z)) ** 2

    sc.closed_forms["gbar0"] = gbar0
    sc.closed_forms["resultant"] = resultant

    if c020 != 0.0 and c002 - k != 0.0:
        def predicted_zeros():
            """Simple zeros of the averaged function (at most one)."""
            if c002 * s == 0.0 or not c002 / c020 < 0.0:
                return []
            lo, hi = (0.0, k) if k > 0 else (k, 0.0)
            if lo <= c002 <= hi:
                return []
            r0 = math.sqrt(-8 * s**2 * c002**3 / ((c002 - k) ** 4 * c020))
            z0 = k / (c002 - k)
            return [(r0, z0)]

        sc.closed_forms["zeros"] = predicted_zeros
    else:
        sc.notes.append("root formula disabled: needs c020 != 0 and c002 != 2(a101 + b011)")

    # second order: c020 = c002 = b002 = b200 = a110 = b020 = c011 = 0,
    # a101 = -b011, a200 = 2 c101
    zero_needed = [(2, (0, 2, 0)), (2, (0, 0, 2)), (1, (0, 0, 2)), (1, (2, 0, 0)),
                   (0, (1, 1, 0)), (1, (0, 2, 0)), (2, (0, 1, 1))]
    if (
        all(sc.coeff(c, e) == 0.0 for c, e in zero_needed)
        and s == 0.0
        and sc.coeff(0, (2, 0, 0)) == 2.0 * sc.coeff(2, (1, 0, 1))
    ):
        kappa = b011 * sc.coeff(2, (1, 1, 0))

        def rho_bar(r, z):
            P = -kappa * r**2 * (1 + z) ** 2 * (-1 + 2 * z)
            Q = kappa * r**2 * (1 + z) ** 2
            return np.array([r * P / (8 * (1 + z) ** 6), -z * Q / (2 * (1 + z) ** 5)])

        sc.closed_forms["rho_bar"] = rho_bar


# ---------------------------------------------------------------------------
# zero-Hopf normal form


def make_zero_hopf(P=None, F=None) -> Scenario:
    """``P`` is a univariate polynomial with ``P(0) = 0`` (default ``P(s) = s``)."""
    P = _poly_from(P if P is not None else {"1": 1.0}, 1, "P")
    if P.coeff((0,)) != 0.0:
        raise ConfigurationError("P must satisfy P(0) = 0")
    dP = P.derivative(0)
    F = _parse_F(F, 3)

    def phi(x):
        return P([x[0] * x[0] + x[1] * x[1]])

    def J0(x):
        dp = dP([x[0] * x[0] + x[1] * x[1]])
        d1 = 2.0 * x[0] * dp
        d2 = 2.0 * x[1] * dp
        return [[0.0, 1.0, -d2], [-1.0, 0.0, d1], [d2, -d1, 0.0]]

    one = ScalarField.constant(1.0, 3)
    spec = PoissonSpec(
        n=3,
        J0=J0,
        I=one,
        h=(one, one),
        phi=(ScalarField(phi, 3, name="phi"),),
    )

    def inverse(y):
        return [y[0], y[1], y[2] - P([y[0] * y[0] + y[1] * y[1]])]

    chart = build_chart(spec, inverse, None, name="zero_hopf")
    perturbed = PerturbedSpec(spec, poly_vector_field(F, 3), 0.0)
    sc = Scenario("zero_hopf", {"P": P.to_json(), "F": _F_json(F)}, spec, chart, perturbed, F)
    _zero_hopf_closed_forms(sc, P)
    return sc


def parity_conditions_hold(F: Sequence[SparsePoly]) -> bool:
    """True when a_ijk = 0 for i odd, j even; b_ijk = 0 for i even, j odd;
    c_ijk = 0 for i, j both even (then the first averaged function vanishes)."""
    a, b, c = F
    if any(e[0] % 2 == 1 and e[1] % 2 == 0 for e in a.terms):
        return False
    if any(e[0] % 2 == 0 and e[1] % 2 == 1 for e in b.terms):
        return False
    if any(e[0] % 2 == 0 and e[1] % 2 == 0 for e in c.terms):
        return False
    return True


def _zero_hopf_closed_forms(sc: Scenario, P: SparsePoly) -> None:
    if any(p.arity != 3 for p in sc.F):
        sc.notes.append("closed forms need eps-independent F")
        return
    a, b, c = sc.F
    Icoef: dict = {}
    Jcoef: dict = {}
    for e, v in a.terms.items():
        key = (e[0] + e[1], e[2])
        Icoef[key] = Icoef.get(key, 0.0) - v * trig_moment(e[0] + 1, e[1])
    for e, v in b.terms.items():
        key = (e[0] + e[1], e[2])
        Icoef[key] = Icoef.get(key, 0.0) - v * trig_moment(e[0], e[1] + 1)
    for e, v in c.terms.items():
        key = (e[0] + e[1], e[2])
        Jcoef[key] = Jcoef.get(key, 0.0) - v * trig_moment(e[0], e[1])
    Icoef = {k: v for k, v in Icoef.items() if v != 0.0}
    Jcoef = {k: v for k, v in Jcoef.items() if v != 0.0}

    def G_dagger(r, w):
        """``(A, B)`` as polynomials in ``(r, w)``, ``w = z - P(r^2)``."""
        A = sum(v * r**p * w**k for (p, k), v in Icoef.items()) if Icoef else 0.0 * r
        B = sum(v * r**p * w**k for (p, k), v in Jcoef.items()) if Jcoef else 0.0 * r
        return np.array([A + 0.0 * r * w, B + 0.0 * r * w])

    def AB(r, z):
        return G_dagger(r, z - P([r * r]))

    dP = P.derivative(0)

    def gbar0(r, z):
        A, B = AB(r, z)
        return np.array([A, B + 2 * r * dP([r * r]) * A])

    sc.closed_forms["G_dagger"] = G_dagger
    sc.closed_forms["AB"] = AB
    sc.closed_forms["gbar0"] = gbar0
    sc.closed_forms["I_coefficients"] = dict(sorted(Icoef.items()))
    sc.closed_forms["J_coefficients"] = dict(sorted(Jcoef.items()))
    sc.closed_forms["parity_vanishing"] = parity_conditions_hold(sc.F)

    if max(p.degree for p in sc.F) > 3:
        sc.notes.append("cubic oracle disabled: perturbation degree exceeds 3")
        return
    alpha1 = Icoef.get((3, 0), 0.0)
    beta1 = Icoef.get((1, 1), 0.0)
    gamma1 = Icoef.get((1, 2), 0.0)
    alpha2 = Jcoef.get((2, 0), 0.0)
    beta2 = Jcoef.get((2, 1), 0.0)
    delta2 = Jcoef.get((0, 2), 0.0)
    gamma2 = Jcoef.get((0, 3), 0.0)
    extra = set(Icoef) - {(3, 0), (1, 1), (1, 2)} | set(Jcoef) - {(2, 0), (2, 1), (0, 2), (0, 3)}
    coeffs = {
        "alpha1": alpha1, "beta1": beta1, "gamma1": gamma1,
        "alpha2": alpha2, "beta2": beta2, "delta2": delta2, "gamma2": gamma2,
    }
    sc.closed_forms["cubic_coefficients"] = coeffs
    if extra:
        sc.notes.append(f"unexpected moment terms {sorted(extra)}")
        return
    if alpha1 == 0.0:
        sc.notes.append("cubic root oracle disabled: alpha1 = 0")
        return
    # r^2 = -(beta1 w + gamma1 w^2)/alpha1 turns G2 into w * Q2(w)
    q0 = -alpha2 * beta1 / alpha1
    q1 = -(alpha2 * gamma1 + beta2 * beta1) / alpha1 + delta2
    q2 = -beta2 * gamma1 / alpha1 + gamma2
    sc.closed_forms["Q2"] = (q2, q1, q0)

    def predicted_zeros():
        """Simple zeros ``(r0, w0, z0)`` with ``r0 > 0`` from the roots of Q2."""
        roots = np.roots([q2, q1, q0]) if (q2 or q1) else np.array([])
        out = []
        for w0 in roots:
            if abs(w0.imag) > 1e-12 * max(1.0, abs(w0)):
                continue
            w0 = float(w0.real)
            r2 = -(beta1 * w0 + gamma1 * w0 * w0) / alpha1
            if r2 <= 0.0 or w0 == 0.0:
                continue
            r0 = math.sqrt(r2)
            out.append((r0, w0, w0 + float(P([r2]))))
        disc = q1 * q1 - 4 * q2 * q0
        if q2 != 0.0 and abs(disc) <= 1e-12 * max(1.0, q1 * q1):
            return []  # double root: not simple
        return sorted(out)

    sc.closed_forms["zeros"] = predicted_zeros


# ---------------------------------------------------------------------------
# Duffing oscillator


def make_duffing(F=None) -> Scenario:
    F = _parse_F(F, 3)
    one = ScalarField.constant(1.0, 3)
    h1 = ScalarField(lambda x: sqrt(1.0 + 0.5 * x[2] * x[0] * x[0]), 3, name="h1")
    spec = PoissonSpec.constant_structure(
        darboux_matrix(3),
        h=(h1, one),
        domain_hint=np.array([[-1.0, 1.0], [-1.0, 1.0], [-0.5, 0.5]]),
    )

    def inverse(y):
        s = np.sqrt(1.0 + 2.0 * y[0] ** 2 * y[2])
        # sign-preserving form of x1 = sqrt((-1 + s) / y3); regular at y3 = 0
        return [y[0] * np.sqrt(2.0 / (1.0 + s)), y[1], y[2]]

    def predicate(x):
        # DPhi is invertible iff 1 + x1^2 x3 > 0
        return 1.0 + x[0] ** 2 * x[2] > 0.0

    chart = build_chart(spec, inverse, predicate, name="duffing")
    perturbed = PerturbedSpec(spec, poly_vector_field(F, 3), 0.0)
    sc = Scenario("duffing", {"F": _F_json(F)}, spec, chart, perturbed, F, leading_powers=(3, 2))

    def d(comp, idx):
        p = F[comp]
        idx = tuple(idx) + ((0,) if p.arity == 4 else ())
        return poly_partial_at_zero(p, idx)

    delta1 = -(
        d(0, (0, 0, 3)) + d(1, (0, 1, 2)) + d(0, (0, 2, 1)) + d(1, (0, 3, 0))
        + 3 * d(0, (0, 1, 2)) + 2 * d(1, (1, 1, 1)) + d(0, (1, 2, 0))
        + 3 * d(0, (2, 0, 1)) + d(1, (2, 1, 0)) + d(0, (3, 0, 0))
    )
    delta2 = -(d(2, (0, 0, 2)) + d(2, (0, 2, 0)) + 2 * d(2, (1, 0, 1)) + d(2, (2, 0, 0)))
    # only the x3-free terms survive at z = 0
    delta1_z0 = -(d(0, (3, 0, 0)) + d(0, (1, 2, 0)) + d(1, (2, 1, 0)) + d(1, (0, 3, 0)))
    delta2_z0 = -(d(2, (2, 0, 0)) + d(2, (0, 2, 0)))
    # + 0.0 turns a negated zero into +0.0
    delta1, delta2, delta1_z0, delta2_z0 = (float(v) + 0.0 for v in (delta1, delta2, delta1_z0, delta2_z0))
    sc.closed_forms["deltas"] = (delta1, delta2)
    sc.closed_forms["ghat_origin"] = (delta1 / 16.0, delta2 / 4.0)
    sc.closed_forms["deltas_z0"] = (delta1_z0, delta2_z0)
    sc.closed_forms["ghat_origin_z0"] = (delta1_z0 / 16.0, delta2_z0 / 4.0)

    def phi_forward(x):
        return [x[0] * np.sqrt(1.0 + x[0] ** 2 * x[2] / 2.0), x[1], x[2]]

    def eta(y):
        u = 1.0 + 2.0 * y[0] ** 2 * y[2]
        return np.sqrt(2.0 + 4.0 * y[0] ** 2 * y[2]) / np.sqrt(1.0 + np.sqrt(u))

    def inverse_radical(y):
        return [np.sqrt((-1.0 + np.sqrt(1.0 + 2.0 * y[0] ** 2 * y[2])) / y[2]), y[1], y[2]]

    sc.closed_forms["phi"] = phi_forward
    sc.closed_forms["eta"] = eta
    sc.closed_forms["inverse_radical"] = inverse_radical
    return sc


# ---------------------------------------------------------------------------


def make_scenario(name: str, parameters: Mapping | None = None) -> Scenario:
    parameters = dict(parameters or {})
    if name == "harmonic_potential":
        return make_harmonic_potential(parameters.get("h"), parameters.get("F"))
    if name == "zero_hopf":
        return make_zero_hopf(parameters.get("P"), parameters.get("F"))
    if name == "duffing":
        return make_duffing(parameters.get("F"))
    raise ConfigurationError(
        f"unknown scenario {name!r}; available: {', '.join(SCENARIO_NAMES)}"
    )


def _poly_schema(pattern: str, description: str) -> dict:
    return {
        "type": "object",
        "description": description,
        "patternProperties": {pattern: {"type": "number"}},
        "additionalProperties": False,
    }


_KEY3 = r"^[0-9]+ [0-9]+ [0-9]+( [0-9]+)?$"
_F3 = {
    "type": "array",
    "description": "perturbation components; keys 'n1 n2 n3' or 'n1 n2 n3 ne' (ne = power of eps)",
    "items": _poly_schema(_KEY3, "one component"),
    "minItems": 3,
    "maxItems": 3,
}

SCENARIO_SCHEMAS = {
    "harmonic_potential": {
        "description": "H = (x1^2 + x2^2 (1 + h(x1, x3))^2)/2, constant Darboux structure, I = 1",
        "type": "object",
        "properties": {
            "h": _poly_schema(r"^[0-9]+ [0-9]+$", "polynomial in (x1, x3), keys 'n1 n3'; default x3"),
            "F": _F3,
        },
        "additionalProperties": False,
    },
    "zero_hopf": {
        "description": "Casimir x3 + P(x1^2 + x2^2), H = (x1^2 + x2^2)/2, I = 1",
        "type": "object",
        "properties": {
            "P": _poly_schema(r"^[0-9]+$", "univariate polynomial with P(0) = 0, keys 'k'; default s"),
            "F": _F3,
        },
        "additionalProperties": False,
    },
    "duffing": {
        "description": "Duffing oscillator with stiffness x3 as Casimir, h1^2 = 1 + x3 x1^2/2",
        "type": "object",
        "properties": {"F": _F3},
        "additionalProperties": False,
    },
}


# ---------------------------------------------------------------------------
# oracle harness


@dataclass
class CrossCheckReport:
    scenario: str
    passed: bool
    threshold: float
    discrepancies: dict = field(default_factory=dict)
    worst_points: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "passed": self.passed,
            "threshold": self.threshold,
            "discrepancies": dict(self.discrepancies),
            "worst_points": dict(self.worst_points),
            "notes": list(self.notes),
        }


def cross_check(scenario: Scenario, probe_grid=None, *, threshold: float = 1e-8,
                config=None) -> CrossCheckReport:
    """Maximum discrepancy between quadrature and each available closed form.

    ``probe_grid`` is a pair ``(r_values, z_values)``; for ``zero_hopf`` the
    second axis is ``w = z - P(r^2)``.  Duffing compares extrapolated values of
    the reduced function at the origin against the Delta formulas with a
    threshold of 1e-4.
    """
    from .averaging import AveragedMap
    from .rootfind import local_small_amplitude_scan

    amap = AveragedMap(scenario.sf, config)
    rep = CrossCheckReport(scenario.name, True, threshold)
    cf = scenario.closed_forms

    def record(name, vals, pts):
        k = int(np.argmax(vals))
        rep.discrepancies[name] = float(vals[k])
        rep.worst_points[name] = [float(v) for v in pts[k]]

    if scenario.name == "duffing":
        rep.threshold = 1e-4
        scan = local_small_amplitude_scan(amap, leading_powers=scenario.leading_powers)
        est = np.array(scan.ghat_origin)
        for key in ("ghat_origin", "ghat_origin_z0"):
            ref = np.array(cf[key])
            rep.discrepancies[key] = float(np.max(np.abs(est - ref)))
            rep.worst_points[key] = [0.0, 0.0]
        rep.passed = rep.discrepancies["ghat_origin"] <= rep.threshold
        if not rep.passed:
            rep.notes.append(
                "extrapolated reduced function disagrees with the Delta formulas; "
                "pipeline trusted (compare ghat_origin_z0)"
            )
        return rep

    if probe_grid is None:
        probe_grid = (np.linspace(0.2, 2.0, 5), np.linspace(-0.5, 2.0, 5))
    rs, zs = (np.asarray(a, float) for a in probe_grid)
    R, Z = (a.ravel() for a in np.meshgrid(rs, zs, indexing="ij"))
    pts = np.stack([R, Z], -1)

    if scenario.name == "harmonic_potential":
        if "gbar0" not in cf:
            rep.notes.append("closed forms disabled for these parameters")
            return rep
        g = amap.gbar0(R, [Z])
        for reading in ("square_of_sum", "sum_of_squares"):
            ref = cf["gbar0"](R, Z, reading)
            record(f"gbar0[{reading}]", np.max(np.abs(g - ref), axis=0), pts)
        rep.passed = rep.discrepancies["gbar0[square_of_sum]"] <= threshold
        matches = [k for k in ("square_of_sum", "sum_of_squares") if rep.discrepancies[f"gbar0[{k}]"] <= threshold]
        rep.notes.append(f"first component matches reading(s): {matches or 'none'}")
        if "rho_bar" in cf:
            rb = amap.rho_bar(R, [Z])
            record("rho_bar", np.max(np.abs(rb - cf["rho_bar"](R, Z)), axis=0), pts)
            rep.passed = rep.passed and rep.discrepancies["rho_bar"] <= threshold
        return rep

    if scenario.name == "zero_hopf":
        if "G_dagger" not in cf:
            rep.notes.append("closed forms disabled for these parameters")
            return rep
        P = SparsePoly.from_json(scenario.parameters["P"], 1)
        dP = P.derivative(0)
        Zz = Z + P([R * R])  # probe axis is w
        g = amap.gbar0(R, [Zz])
        A = g[0]
        B = g[1] - 2 * R * dP([R * R]) * A
        ref = cf["G_dagger"](R, Z)
        record("G_dagger", np.max(np.abs(np.stack([A, B]) - ref), axis=0), pts)
        rep.passed = rep.discrepancies["G_dagger"] <= threshold
        return rep

    raise ConfigurationError(f"no oracle harness for scenario {scenario.name!r}")
