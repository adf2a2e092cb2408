"""Darboux chart and the Lagrange standard form.

The chart ``Phi(x) = (x1 h1, x2 h2, D_3, ..., D_n)`` straightens the Poisson
system into ``dy/dtau = J_D grad H*(y)`` with ``H* = (y1^2 + y2^2) / 2`` after
the time change ``dtau = I(x) eta dt``.  Adding cylindrical coordinates and
taking the angle as independent variable gives the periodic standard form
``d(r, z)/dtheta = eps G(theta, r, z; eps)``.

All evaluators broadcast over numpy arrays, so a batch of quadrature nodes or
Newton starts is processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateChartError,
    DomainError,
    InversionError,
    PolarSingularityError,
    RankDegeneracyError,
    SlowAngleError,
)
from .jets import Jet, level, primal, seed
from .poisson import PerturbedSpec, PoissonSpec, hamiltonian

__all__ = [
    "DarbouxChart",
    "StandardForm",
    "build_chart",
    "invert_chart",
    "chart_inverse_jet",
    "transformed_perturbation",
    "reduced_unperturbed_field",
    "standard_form",
    "chart_checks",
]

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12


def _zero(v) -> bool:
    return isinstance(v, (float, int)) and v == 0


def _lift_inner(x: Sequence, n: int) -> list[Jet]:
    """Wrap coordinates in a new jet level seeded along the n coordinate axes."""
    out = []
    for i, v in enumerate(x):
        p = [0.0] * n
        p[i] = 1.0
        out.append(Jet(v, p))
    return out


def _as_float_arrays(vals: Sequence) -> list[np.ndarray]:
    arrs = [np.asarray(primal(v), dtype=float) for v in vals]
    shape = np.broadcast_shapes(*(a.shape for a in arrs))
    return [np.broadcast_to(a, shape).astype(float) for a in arrs]


@dataclass(frozen=True)
class DarbouxChart:
    """Evaluators for ``Phi``, ``Phi^{-1}``, ``DPhi`` and ``eta``.

    ``closed_inverse`` (optional) maps a list of float arrays ``y`` to ``x``.
    ``u_predicate`` maps float arrays ``x`` to a boolean array (membership in U).
    """

    spec: PoissonSpec
    closed_inverse: Callable | None = None
    u_predicate: Callable | None = None
    name: str = "chart"

    @property
    def n(self) -> int:
        return self.spec.n

    def forward(self, x: Sequence) -> list:
        h1, h2 = self.spec.h
        y = [x[0] * h1(x), x[1] * h2(x)]
        y.extend(self.spec.casimir(j, x) for j in range(3, self.n + 1))
        return y

    def jacobian(self, x: Sequence) -> list[list]:
        """``DPhi(x)`` as a nested list whose entries carry the jet level of ``x``."""
        n = self.n
        y = self.forward(_lift_inner(x, n))
        out = []
        for yi in y:
            if isinstance(yi, Jet) and yi.level == max(level(v) for v in x) + 1:
                out.append(list(yi.partials))
            else:
                out.append([0.0] * n)
        return out

    def jacobian_matrix(self, x: Sequence) -> np.ndarray:
        """Numeric ``DPhi`` with shape ``batch + (n, n)``."""
        xs = _as_float_arrays(x)
        shape = xs[0].shape
        D = self.jacobian(xs)
        return np.stack(
            [np.stack([np.broadcast_to(np.asarray(e, float), shape) for e in row], -1) for row in D],
            -2,
        )

    def in_domain(self, x: Sequence) -> np.ndarray:
        xs = _as_float_arrays(x)
        if self.u_predicate is None:
            return np.ones(xs[0].shape, dtype=bool)
        return np.broadcast_to(np.asarray(self.u_predicate(xs), dtype=bool), xs[0].shape)

    def eta_at_x(self, x: Sequence, dphi=None):
        """``grad(y1)^T J0(x) grad(y2)``; follows the jet level of ``x``."""
        dphi = self.jacobian(x) if dphi is None else dphi
        J0 = self.spec.J0(x)
        total = 0.0
        for k, a in enumerate(dphi[0]):
            if _zero(a):
                continue
            for l, b in enumerate(dphi[1]):
                e = J0[k][l]
                if _zero(b) or _zero(e):
                    continue
                total = total + a * e * b
        return total

    def eta(self, y: Sequence) -> np.ndarray:
        x = self.inverse(y)
        return np.asarray(primal(self.eta_at_x(x)), dtype=float) + 0.0 * x[0]

    # inversion --------------------------------------------------------------

    def _newton_inverse(self, ys, guess=None, strict=True):
        n = self.n
        x = [np.array(g, dtype=float) for g in (ys if guess is None else _as_float_arrays(guess))]
        shape = ys[0].shape
        x = [np.broadcast_to(v, shape).astype(float) for v in x]
        Y = np.stack(ys, -1)

        def residual(xx):
            fx = self.forward(xx)
            F = np.stack([np.broadcast_to(np.asarray(primal(f), float), shape) for f in fx], -1)
            return F - Y

        ok = self.in_domain(x)
        if strict and not np.all(ok):
            raise DomainError("initial guess for chart inversion lies outside U")
        res = residual(x)
        norm = np.max(np.abs(res), axis=-1)
        for _ in range(NEWTON_MAX_ITER):
            active = norm > NEWTON_TOL
            if not np.any(active):
                break
            M = self.jacobian_matrix(x)
            with np.errstate(all="ignore"):
                try:
                    step = np.linalg.solve(M, -res[..., None])[..., 0]
                except np.linalg.LinAlgError:
                    step = np.stack([np.linalg.lstsq(m, -r, rcond=None)[0] for m, r in
                                     zip(M.reshape(-1, n, n), res.reshape(-1, n))]).reshape(res.shape)
            step[~active] = 0.0
            t = np.ones(shape)
            pending = active.copy()
            X = np.stack(x, -1)
            for _half in range(40):
                trial = X + t[..., None] * step
                tl = [trial[..., i] for i in range(n)]
                with np.errstate(all="ignore"):
                    rt = residual(tl)
                nt = np.max(np.abs(rt), axis=-1)
                good = pending & np.isfinite(nt) & self.in_domain(tl) & (nt < norm)
                X = np.where(good[..., None], trial, X)
                res = np.where(good[..., None], rt, res)
                norm = np.where(good, nt, norm)
                pending &= ~good
                if not np.any(pending):
                    break
                t = np.where(pending, 0.5 * t, t)
            x = [X[..., i] for i in range(n)]
            if np.any(pending & (norm > NEWTON_TOL)):
                # no decrease along the damped direction: stagnated
                stuck = pending & (norm > NEWTON_TOL)
                if strict:
                    raise InversionError(
                        "chart inversion stagnated", residual=float(np.max(norm[stuck]))
                    )
                norm = np.where(stuck, np.inf, norm)
                break
        bad = ~(norm <= NEWTON_TOL)
        if strict and np.any(bad):
            raise InversionError(
                f"chart inversion did not converge in {NEWTON_MAX_ITER} iterations",
                residual=float(np.max(norm[bad])),
            )
        return x, bad

    def inverse(self, y: Sequence, guess=None, method: str = "auto", strict: bool = True):
        """Plain-valued ``Phi^{-1}(y)``; ``method`` is ``auto``, ``closed`` or ``newton``."""
        ys = _as_float_arrays(y)
        x, bad = self._inverse_values(ys, guess, method, strict)
        return x

    def _inverse_values(self, ys, guess=None, method="auto", strict=True):
        if method not in ("auto", "closed", "newton"):
            raise ConfigurationError(f"unknown inversion method {method!r}")
        if method == "closed" and self.closed_inverse is None:
            raise ConfigurationError(f"chart {self.name!r} has no closed-form inverse")
        if self.closed_inverse is not None and method != "newton":
            with np.errstate(all="ignore"):
                x = [np.broadcast_to(np.asarray(v, float), ys[0].shape).astype(float)
                     for v in self.closed_inverse(ys)]
            bad = ~np.all(np.isfinite(np.stack(x, -1)), axis=-1)
        else:
            x, bad = self._newton_inverse(ys, guess, strict)
        with np.errstate(all="ignore"):
            bad = bad | ~self.in_domain(x)
        if strict and np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            pt = [float(np.atleast_1d(v)[tuple(idx)]) for v in ys]
            raise DomainError(f"Phi^-1(y) leaves U at y={pt}")
        return x, bad

    def inverse_jet(self, y: Sequence, strict: bool = True):
        """``Phi^{-1}`` on jets: values from the inverse, partials from
        ``DPhi(x) dx = dy`` (implicit function theorem).  Returns ``(x, bad)``."""
        top = max(level(v) for v in y)
        if top > 1:
            raise ConfigurationError("chart inversion supports first-level jets only")
        ys = _as_float_arrays(y)
        x, bad = self._inverse_values(ys, strict=strict)
        if top == 0:
            return x, bad
        m = next(v.m for v in y if isinstance(v, Jet))
        shape = ys[0].shape
        M = self.jacobian_matrix(x)
        dY = np.zeros(shape + (self.n, m))
        for i, v in enumerate(y):
            if isinstance(v, Jet):
                for s, p in enumerate(v.partials):
                    dY[..., i, s] = p
        with np.errstate(all="ignore"):
            det = np.linalg.det(M)
            scale = np.max(np.abs(M), axis=(-2, -1)) ** self.n
            sing = ~(np.abs(det) > 1e-14 * scale)
            if strict and np.any(sing & ~bad):
                raise DegenerateChartError("DPhi is singular at the inverse image")
            bad = bad | sing
            Msafe = np.where(bad[..., None, None], np.eye(self.n), M)
            dX = np.linalg.solve(Msafe, dY)
        return [Jet(x[i], [dX[..., i, s] for s in range(m)]) for i in range(self.n)], bad


def build_chart(spec: PoissonSpec, closed_inverse=None, u_predicate=None, name="chart") -> DarbouxChart:
    """Construct the Darboux chart; ``DPhi(0)`` must be the identity."""
    chart = DarbouxChart(spec, closed_inverse, u_predicate, name)
    D0 = chart.jacobian_matrix([0.0] * spec.n)
    if not np.allclose(D0, np.eye(spec.n), atol=1e-12, rtol=0):
        raise ConfigurationError("DPhi(0) is not the identity; check h and phi")
    return chart


def invert_chart(chart: DarbouxChart, y, guess=None, method: str = "auto") -> np.ndarray:
    """``x = Phi^{-1}(y)`` at a single point (raises on failure)."""
    ys = [float(v) for v in y]
    x = chart.inverse(ys, guess=guess, method=method)
    return np.array([float(v) for v in x])


def chart_inverse_jet(chart: DarbouxChart, y, seeds=None) -> list[Jet]:
    """``Phi^{-1}`` at ``y`` with derivatives along ``seeds`` (default: identity)."""
    y = [float(v) for v in y]
    n = chart.n
    seeds = np.eye(n) if seeds is None else np.asarray(seeds, float)
    yj = [Jet(v, list(seeds[:, i])) for i, v in enumerate(y)]
    x, _ = chart.inverse_jet(yj)
    return [Jet(float(v.value), [float(p) for p in v.partials]) for v in x]


def transformed_perturbation(chart: DarbouxChart, perturbed: PerturbedSpec, y, eps: float) -> np.ndarray:
    """``F*(y; eps) = DPhi(x) F(x; eps) / (I(x) eta)`` at ``x = Phi^{-1}(y)``."""
    x = chart.inverse([float(v) for v in y])
    x = [float(v) for v in x]
    D = np.array(chart.jacobian_matrix(x))
    eta = float(primal(chart.eta_at_x(x)))
    I = float(primal(chart.spec.I(x)))
    if eta == 0.0:
        raise RankDegeneracyError(f"eta vanishes at y={list(y)}")
    F = np.array([float(primal(f)) for f in perturbed.F(x + [float(eps)])])
    return D @ F / (I * eta)


def reduced_unperturbed_field(chart: DarbouxChart, y) -> np.ndarray:
    """``DPhi J grad H / (I eta)`` at ``x = Phi^{-1}(y)``; equals ``J_D grad H*``."""
    x = [float(v) for v in chart.inverse([float(v) for v in y])]
    n = chart.n
    xj = seed(x)
    gH = np.array([float(p) for p in hamiltonian(chart.spec)(xj).partials])
    I = float(primal(chart.spec.I(x)))
    J0 = np.array([[float(primal(e)) for e in row] for row in chart.spec.J0(x)])
    D = chart.jacobian_matrix(x)
    eta = float(primal(chart.eta_at_x(x)))
    return D @ (I * J0 @ gH) / (I * eta)


@dataclass(frozen=True)
class StandardForm:
    """``d(r, z)/dtheta = eps G(theta, r, z; eps)`` built from a chart and a perturbation."""

    chart: DarbouxChart
    perturbation: PerturbedSpec
    r_min: float = 1e-6
    slow_angle_guard: float = 0.1

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def dim(self) -> int:
        return self.chart.n - 1

    def _core(self, theta, r, z, eps, strict=True):
        n = self.n
        if len(z) != n - 2:
            raise ConfigurationError(f"expected {n - 2} z-coordinates, got {len(z)}")
        c, s = np.cos(theta), np.sin(theta)
        rp = np.asarray(primal(r), float)
        shape = np.broadcast_shapes(np.shape(theta), rp.shape, *(np.shape(primal(v)) for v in z))
        polar = np.broadcast_to(~(rp > self.r_min), shape)
        if strict and np.any(polar):
            raise PolarSingularityError(f"r <= r_min = {self.r_min}")
        y = [r * c, r * s] + list(z)
        x, bad = self.chart.inverse_jet(y, strict=strict)
        bad = np.broadcast_to(bad, shape) | polar
        spec = self.chart.spec
        dphi = self.chart.jacobian(x)
        eta = self.chart.eta_at_x(x, dphi)
        I = spec.I(x)
        scale = I * eta
        with np.errstate(all="ignore"):
            deg = np.broadcast_to(np.asarray(primal(scale), float) == 0.0, shape)
        if strict and np.any(deg & ~bad):
            raise RankDegeneracyError("I * eta vanishes along the circle")
        bad = bad | deg
        F = self.perturbation.F(list(x) + [eps])
        Fs = []
        for i in range(n):
            acc = 0.0
            for k in range(n):
                a = dphi[i][k]
                if _zero(a) or _zero(F[k]):
                    continue
                acc = acc + a * F[k]
            Fs.append(acc / scale if not _zero(acc) else 0.0)
        G1s = c * Fs[0] + s * Fs[1]
        G2s = c * Fs[1] - s * Fs[0]
        if _zero(eps):
            thetadot = -1.0
        else:
            thetadot = -1.0 + eps * G2s / r
            with np.errstate(all="ignore"):
                slow = np.broadcast_to(~(np.abs(np.asarray(primal(thetadot), float)) >= self.slow_angle_guard), shape)
            if strict and np.any(slow & ~bad):
                raise SlowAngleError(
                    f"|dtheta/dtau| < {self.slow_angle_guard}: eps too large for averaging"
                )
            bad = bad | slow
        G = [G1s / thetadot] + [Fs[j] / thetadot for j in range(2, n)]
        return {"G": G, "thetadot": thetadot, "scale": scale, "Fstar": Fs, "bad": bad, "shape": shape}

    def G(self, theta, r, z, eps=0.0, strict=True) -> np.ndarray:
        """Values of ``G`` with shape ``(n - 1,) + batch``."""
        out = self._core(theta, r, z, eps, strict)
        return _values(out["G"], out["shape"], out["bad"])

    def rhs(self, theta, r, z, eps, strict=True) -> np.ndarray:
        """``(dr/dtheta, dz/dtheta) = eps G``."""
        return float(eps) * self.G(theta, r, z, eps, strict)

    def rhs_with_time(self, theta, r, z, eps, strict=True):
        """``eps G`` and ``dt/dtheta = 1 / (I eta dtheta/dtau)``."""
        out = self._core(theta, r, z, eps, strict)
        G = _values(out["G"], out["shape"], out["bad"])
        with np.errstate(all="ignore"):
            dt = 1.0 / (np.asarray(primal(out["scale"]), float) * np.asarray(primal(out["thetadot"]), float))
        dt = np.where(out["bad"], np.nan, np.broadcast_to(dt, out["shape"]))
        return float(eps) * G, dt

    def jet_rhs(self, theta, r, z, strict=True, eps=0.0):
        """``(g0, D_(r,z) g0, g1)`` from one evaluation seeded in ``(r, z, eps)``.

        ``g0`` has shape ``(n-1,) + batch``, the Jacobian ``(n-1, n-1) + batch``.
        """
        n = self.n
        rz = seed([r] + list(z), m=n)
        ej = Jet(eps, [0.0] * (n - 1) + [1.0])
        out = self._core(theta, rz[0], rz[1:], ej, strict)
        shape, bad = out["shape"], out["bad"]
        vals = _values(out["G"], shape, bad)
        parts = _partials(out["G"], shape, bad, n)
        return vals, parts[:, : n - 1], parts[:, n - 1]

    def g0_jacobian(self, theta, r, z, strict=True):
        """``(g0, D_(r,z) g0)`` without the eps seed."""
        return self.G_jacobian(theta, r, z, 0.0, strict)

    def G_jacobian(self, theta, r, z, eps=0.0, strict=True):
        """``(G, D_(r,z) G)`` at a given eps."""
        m = self.n - 1
        rz = seed([r] + list(z), m=m)
        out = self._core(theta, rz[0], rz[1:], eps, strict)
        shape, bad = out["shape"], out["bad"]
        return _values(out["G"], shape, bad), _partials(out["G"], shape, bad, m)

    def evaluate(self, theta, r, z, eps, jacobian=False, strict=True) -> dict:
        """``G``, optionally ``D_(r,z) G``, and ``dt/dtheta`` in one pass."""
        m = self.n - 1
        if jacobian:
            rz = seed([r] + list(z), m=m)
            out = self._core(theta, rz[0], rz[1:], eps, strict)
        else:
            out = self._core(theta, r, z, eps, strict)
        shape, bad = out["shape"], out["bad"]
        res = {"G": _values(out["G"], shape, bad), "bad": bad}
        if jacobian:
            res["DG"] = _partials(out["G"], shape, bad, m)
        with np.errstate(all="ignore"):
            dt = 1.0 / (np.asarray(primal(out["scale"]), float) * np.asarray(primal(out["thetadot"]), float))
        res["dt"] = np.where(bad, np.nan, np.broadcast_to(dt, shape))
        return res


def _values(comps, shape, bad) -> np.ndarray:
    out = np.stack([np.broadcast_to(np.asarray(primal(c), float), shape) for c in comps])
    if np.any(bad):
        out = np.where(bad, np.nan, out)
    return out


def _partials(comps, shape, bad, m) -> np.ndarray:
    rows = []
    for c in comps:
        if isinstance(c, Jet):
            rows.append(np.stack([np.broadcast_to(np.asarray(p, float), shape) for p in c.partials]))
        else:
            rows.append(np.zeros((m,) + shape))
    out = np.stack(rows)
    if np.any(bad):
        out = np.where(bad, np.nan, out)
    return out


def standard_form(chart: DarbouxChart, perturbed: PerturbedSpec, r_min: float = 1e-6,
                  slow_angle_guard: float = 0.1) -> StandardForm:
    if perturbed.base is not chart.spec and perturbed.base.n != chart.spec.n:
        raise ConfigurationError("perturbation and chart dimensions differ")
    return StandardForm(chart, perturbed, r_min, slow_angle_guard)


@dataclass
class ChartCheckReport:
    round_trip_x: float
    round_trip_y: float
    dphi0_identity: float
    min_abs_eta: float
    sample_count: int
    passed: bool = field(default=False)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def sample_domain(chart: DarbouxChart, count: int, seed_value: int = 0x5EED) -> np.ndarray:
    """``count`` points of ``domain_hint`` that satisfy ``u_predicate``."""
    rng = np.random.default_rng(seed_value)
    box = chart.spec.domain_hint
    pts = np.empty((0, chart.n))
    while len(pts) < count:
        cand = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((4 * count, chart.n))
        ok = chart.in_domain([cand[:, i] for i in range(chart.n)])
        pts = np.vstack([pts, cand[ok]])
    return pts[:count]


def chart_checks(chart: DarbouxChart, count: int = 100, seed_value: int = 0x5EED) -> ChartCheckReport:
    """Round trips on sampled points of U, ``DPhi(0) = I`` and ``eta != 0``."""
    pts = sample_domain(chart, count, seed_value)
    xs = [pts[:, i] for i in range(chart.n)]
    ys = [np.asarray(primal(v), float) * np.ones(count) for v in chart.forward(xs)]
    xb = chart.inverse(ys)
    rt_x = float(np.max(np.abs(np.stack(xb) - np.stack(xs))))
    yb = [np.asarray(primal(v), float) * np.ones(count) for v in chart.forward(xb)]
    rt_y = float(np.max(np.abs(np.stack(yb) - np.stack(ys))))
    D0 = chart.jacobian_matrix([0.0] * chart.n)
    d0 = float(np.max(np.abs(D0 - np.eye(chart.n))))
    eta = np.abs(np.asarray(primal(chart.eta_at_x(xs)), float)) * np.ones(count)
    rep = ChartCheckReport(rt_x, rt_y, d0, float(np.min(eta)), count)
    rep.passed = rt_x <= 1e-10 and rt_y <= 1e-10 and d0 <= 1e-12 and rep.min_abs_eta > 0
    return rep
