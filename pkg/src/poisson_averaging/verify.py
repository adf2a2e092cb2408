"""Shooting certification of averaging predictions.

The standard form is integrated with the angle as independent variable.  The
2pi return map ``P`` and its Jacobian (the monodromy matrix, from the
variational equation driven by jets) feed a Newton iteration on ``P(v) - v``.
Original time is carried along as an extra state so that orbits can be mapped
back with their physical period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, IntegrationError, NumericalError
from .integrate import IntegratorConfig, Solution, dopri45
from .reduction import DarbouxChart, StandardForm

__all__ = [
    "Trajectory",
    "OrbitCertificate",
    "ContinuationTable",
    "XOrbit",
    "integrate_standard_form",
    "poincare_shoot",
    "continuation_in_epsilon",
    "map_orbit_back",
    "SHOOT_TOL",
]

SHOOT_TOL = 1e-9
DEGENERACY_TOL = 1e-8
TRIVIAL_R = 1e-6
STEP_TOL = 1e-11
TWO_PI = 2.0 * math.pi


@dataclass
class Trajectory:
    """Solution in ``(theta, r, z)``, optionally with the variational matrix and time."""

    theta: np.ndarray
    states: np.ndarray  # (K, m)
    epsilon: float
    solution: Solution = field(repr=False, default=None)
    t: np.ndarray | None = None
    monodromy: np.ndarray | None = None

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, theta) -> np.ndarray:
        m = self.states.shape[1]
        return self.solution(theta)[:, :m]

    def time_at(self, theta) -> np.ndarray:
        if self.t is None:
            raise ConfigurationError("trajectory was integrated without original time")
        return self.solution(theta)[:, -1]


def _rhs_factory(sf: StandardForm, eps: float, m: int, variational: bool, with_time: bool):
    def f(theta, u):
        v = u[:m]
        res = sf.evaluate(theta, v[0], list(v[1:]), eps, jacobian=variational, strict=False)
        out = [eps * res["G"]]
        if variational:
            Phi = u[m : m + m * m].reshape(m, m)
            out.append((eps * res["DG"] @ Phi).ravel())
        if with_time:
            out.append(np.atleast_1d(res["dt"]))
        return np.concatenate(out)

    return f


def integrate_standard_form(
    sf: StandardForm,
    start: Sequence[float],
    eps: float,
    theta_span: tuple = (0.0, TWO_PI),
    config: IntegratorConfig | None = None,
    *,
    variational: bool = False,
    with_time: bool = False,
) -> Trajectory:
    """Integrate ``d(r, z)/dtheta = eps G`` from ``start``.

    Raises :class:`IntegrationError` (with the angle reached) when the step
    budget runs out or the solution leaves the region where the standard
    form is defined (``r <= r_min``, slow-angle guard, outside U).
    """
    m = sf.dim
    v0 = np.asarray(start, float)
    if v0.shape != (m,):
        raise ConfigurationError(f"start must have {m} entries")
    if not v0[0] > sf.r_min:
        raise IntegrationError(f"start has r <= r_min = {sf.r_min}", theta=theta_span[0])
    eps = float(eps)
    u0 = [v0]
    if variational:
        u0.append(np.eye(m).ravel())
    if with_time:
        u0.append(np.zeros(1))
    u0 = np.concatenate(u0)
    f = _rhs_factory(sf, eps, m, variational, with_time)
    try:
        sol = dopri45(f, float(theta_span[0]), float(theta_span[1]), u0, config)
    except IntegrationError:
        raise
    except NumericalError as exc:
        raise IntegrationError(str(exc), theta=theta_span[0]) from exc
    states = sol.y[:, :m]
    traj = Trajectory(sol.t, states, eps, sol)
    if variational:
        traj.monodromy = sol.y[-1, m : m + m * m].reshape(m, m)
    if with_time:
        traj.t = sol.y[:, -1]
    return traj


@dataclass
class OrbitCertificate:
    epsilon: float
    status: str  # isolated | degenerate_family | no_orbit | trivial
    fixed_point: np.ndarray | None = None
    residual: float = float("nan")
    predicted: np.ndarray | None = None
    distance: float = float("nan")
    monodromy: np.ndarray | None = None
    multipliers: np.ndarray | None = None
    iterations: int = 0
    period_t: float = float("nan")
    orbit_x: np.ndarray | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "isolated"

    def to_dict(self, include_orbit: bool = False) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a, float).tolist()

        mult = None
        if self.multipliers is not None:
            mult = [[float(z.real), float(z.imag)] for z in self.multipliers]
        out = {
            "epsilon": self.epsilon,
            "status": self.status,
            "fixed_point": arr(self.fixed_point),
            "residual": _num(self.residual),
            "predicted": arr(self.predicted),
            "distance": _num(self.distance),
            "monodromy": arr(self.monodromy),
            "multipliers": mult,
            "iterations": self.iterations,
            "period_t": _num(self.period_t),
            "message": self.message,
        }
        if include_orbit:
            out["orbit_x"] = arr(self.orbit_x)
        return out


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _return_map(sf, eps, v, config):
    traj = integrate_standard_form(sf, v, eps, (0.0, TWO_PI), config, variational=True)
    return traj.end, traj.monodromy


def poincare_shoot(
    sf: StandardForm,
    eps: float,
    guess: Sequence[float],
    config: IntegratorConfig | None = None,
    *,
    shoot_tol: float = SHOOT_TOL,
    max_iter: int = 25,
    predicted: Sequence[float] | None = None,
    degeneracy_tol: float = DEGENERACY_TOL,
    orbit_samples: int = 0,
) -> OrbitCertificate:
    """Newton on ``P(v) - v`` for the 2pi map ``P``; never raises for a failed shoot."""
    eps = float(eps)
    m = sf.dim
    v = np.asarray(guess, float).copy()
    pred = np.asarray(predicted if predicted is not None else guess, float)
    cert = OrbitCertificate(epsilon=eps, status="no_orbit", predicted=pred)
    try:
        Pv, M = _return_map(sf, eps, v, config)
    except NumericalError as exc:
        cert.message = f"integration failed at the guess: {exc}"
        return cert
    R = Pv - v
    res = float(np.max(np.abs(R)))
    eye = np.eye(m)
    # P - id is O(eps), so a small residual alone does not pin the fixed point
    # down; iterate until the Newton correction itself is negligible.
    step_tol = STEP_TOL * max(1.0, float(np.max(np.abs(v))))
    for it in range(max_iter + 1):
        cert.iterations = it
        smin = float(np.linalg.svd(M - eye, compute_uv=False)[-1])
        if smin < degeneracy_tol:
            cert.message = "return map Jacobian minus identity is singular"
            break
        step = np.linalg.solve(M - eye, -R)
        if res <= shoot_tol and float(np.max(np.abs(step))) <= step_tol:
            break
        if it == max_iter:
            cert.message = f"Newton did not converge in {max_iter} iterations"
            if res > shoot_tol:
                return _finish(cert, v, res, M)
            break
        lam = 1.0
        accepted = False
        for _ in range(12):
            trial = v + lam * step
            if trial[0] > sf.r_min:
                try:
                    Pt, Mt = _return_map(sf, eps, trial, config)
                    Rt = Pt - trial
                    rt = float(np.max(np.abs(Rt)))
                    if rt < res or rt <= shoot_tol:
                        v, R, res, M = trial, Rt, rt, Mt
                        accepted = True
                        break
                except NumericalError:
                    pass
            lam *= 0.5
        if not accepted:
            if res <= shoot_tol:
                break  # at the integrator noise floor
            cert.message = "Newton step could not reduce the residual"
            return _finish(cert, v, res, M)

    cert = _finish(cert, v, res, M)
    smin = float(np.linalg.svd(M - eye, compute_uv=False)[-1])
    if res <= shoot_tol and smin < degeneracy_tol:
        cert.status = "degenerate_family"
        cert.message = "every nearby point is fixed: no isolated orbit"
    elif res <= shoot_tol and v[0] <= TRIVIAL_R:
        cert.status = "trivial"
        cert.message = "converged to the equilibrium"
    elif res <= shoot_tol:
        cert.status = "isolated"
        cert.distance = float(np.linalg.norm(v - pred))
        try:
            traj = integrate_standard_form(sf, v, eps, (0.0, TWO_PI), config, with_time=True)
            cert.period_t = float(abs(traj.t[-1]))
            if orbit_samples:
                th = np.linspace(0.0, TWO_PI, orbit_samples)
                cert.orbit_x = map_orbit_back(sf.chart, traj, th).x
        except NumericalError as exc:
            cert.message = f"period reconstruction failed: {exc}"
    return cert


def _finish(cert, v, res, M):
    cert.fixed_point = v.copy()
    cert.residual = res
    cert.monodromy = M.copy()
    cert.multipliers = np.linalg.eigvals(M)
    return cert


@dataclass
class ContinuationTable:
    rows: list
    slope: float | None
    flagged: bool
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "slope": self.slope,
            "flagged": self.flagged,
            "message": self.message,
        }


def continuation_in_epsilon(
    sf: StandardForm,
    zero: Sequence[float],
    eps_list: Sequence[float],
    config: IntegratorConfig | None = None,
    **shoot_kw,
) -> ContinuationTable:
    """Shoot at decreasing eps, each from the previous fixed point, and fit
    the slope of ``log |fixed_point - zero|`` against ``log eps``."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ConfigurationError("eps_list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])) or eps_list[-1] <= 0:
        raise ConfigurationError("eps_list must be positive and strictly decreasing")
    zero = np.asarray(zero, float)
    rows = []
    guess = zero
    flagged = False
    msg = ""
    for eps in eps_list:
        cert = poincare_shoot(sf, eps, guess, config, predicted=zero, **shoot_kw)
        rows.append(cert)
        if cert.status == "isolated":
            guess = cert.fixed_point
        elif cert.status == "degenerate_family":
            flagged = True
            msg = "degenerate family: no isolated orbit to continue"
        else:
            flagged = True
            msg = f"shoot failed at eps={eps}: {cert.message}"
            break
    good = [r for r in rows if r.status == "isolated" and r.distance > 0]
    slope = None
    if len(good) >= 2 and len(good) == len(rows):
        x = np.log([r.epsilon for r in good])
        y = np.log([r.distance for r in good])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        flagged = True
        msg = msg or "too few isolated fixed points for a slope"
    return ContinuationTable(rows, slope, flagged, msg)


@dataclass
class XOrbit:
    theta: np.ndarray
    x: np.ndarray  # (K, n)
    t: np.ndarray | None

    @property
    def gap(self) -> float:
        return float(np.max(np.abs(self.x[-1] - self.x[0])))


def map_orbit_back(chart: DarbouxChart, trajectory, theta=None) -> XOrbit:
    """``x = Phi^{-1}(r cos theta, r sin theta, z)`` along a trajectory.

    ``trajectory`` is a :class:`Trajectory` (sampled at ``theta`` or at its
    own steps) or an array of rows ``(theta, r, z...)``.  Raises
    :class:`DomainError` naming the first sample that leaves U.
    """
    t = None
    if isinstance(trajectory, Trajectory):
        if theta is None:
            th = trajectory.theta
            states = trajectory.states
            t = trajectory.t
        else:
            th = np.asarray(theta, float)
            states = trajectory(th)
            if trajectory.t is not None:
                t = trajectory.time_at(th)
    else:
        arr = np.atleast_2d(np.asarray(trajectory, float))
        th, states = arr[:, 0], arr[:, 1:]
    if states.shape[1] != chart.n - 1:
        raise ConfigurationError(f"trajectory rows need {chart.n - 1} state entries")
    r = states[:, 0]
    y = [r * np.cos(th), r * np.sin(th)] + [states[:, j] for j in range(1, states.shape[1])]
    x, bad = chart._inverse_values([np.asarray(v, float) for v in y], strict=False)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise DomainError(
            f"sample {k} (theta={th[k]:.6g}, state={states[k].tolist()}) maps outside U"
        )
    return XOrbit(th, np.stack(x, -1), t)
