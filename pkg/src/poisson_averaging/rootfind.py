"""Simple zeros of the averaged functions and their stability."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .averaging import AveragedMap
from .errors import ConfigurationError

__all__ = [
    "SearchBox",
    "Zero",
    "ZeroReport",
    "Stability",
    "find_zeros",
    "classify_stability",
    "routh_hurwitz",
    "characteristic_polynomial",
    "local_small_amplitude_scan",
    "SmallAmplitudeReport",
]

NEWTON_TOL = 1e-10
DEDUP_RADIUS = 1e-6
DET_TOL = 1e-8
IDENTICALLY_ZERO_TOL = 1e-12
STEP_TOL = 1e-9
POLISH_ITER = 6


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SearchBox:
    r_range: tuple
    z_ranges: tuple
    grid: tuple

    def __post_init__(self):
        r_lo, r_hi = (float(v) for v in self.r_range)
        if not 0.0 < r_lo < r_hi:
            raise ConfigurationError("r_range must satisfy 0 < lower < upper")
        zr = tuple((float(a), float(b)) for a, b in self.z_ranges)
        if any(not a < b for a, b in zr):
            raise ConfigurationError("each z range must be a nonempty interval")
        grid = self.grid
        if isinstance(grid, (int, np.integer)):
            grid = (int(grid),) * (1 + len(zr))
        grid = tuple(int(g) for g in grid)
        if len(grid) != 1 + len(zr):
            raise ConfigurationError("grid needs one node count per axis")
        if any(g < 2 for g in grid):
            raise ConfigurationError("grid node counts must be >= 2")
        object.__setattr__(self, "r_range", (r_lo, r_hi))
        object.__setattr__(self, "z_ranges", zr)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def square(cls, r_range, z_range, grid: int = 13) -> "SearchBox":
        return cls(tuple(r_range), (tuple(z_range),), grid)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.r_range, *self.z_ranges])

    def nodes(self) -> np.ndarray:
        axes = [np.linspace(lo, hi, g) for (lo, hi), g in zip(self.bounds, self.grid)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], -1)

    def contains(self, pts: np.ndarray, slack: float = 0.0) -> np.ndarray:
        b = self.bounds
        return np.all((pts >= b[:, 0] - slack) & (pts <= b[:, 1] + slack), axis=-1)

    def to_dict(self) -> dict:
        return {"r_range": list(self.r_range), "z_ranges": [list(z) for z in self.z_ranges],
                "grid": list(self.grid)}


@dataclass
class Zero:
    point: np.ndarray
    residual: float
    jacobian: np.ndarray
    simple: bool
    stability: Stability
    order: int
    residual_doubled: float = float("nan")
    in_U: bool = True
    newton_step: float = float("nan")

    @property
    def r(self) -> float:
        return float(self.point[0])

    @property
    def z(self) -> np.ndarray:
        return self.point[1:]

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "residual": float(self.residual),
            "residual_doubled": float(self.residual_doubled),
            "jacobian": [[float(v) for v in row] for row in self.jacobian],
            "simple": bool(self.simple),
            "stability": self.stability.value,
            "order": self.order,
            "in_U": bool(self.in_U),
            "newton_step": float(self.newton_step),
        }


@dataclass
class ZeroReport:
    zeros: list
    metadata: dict = field(default_factory=dict)

    @property
    def simple_zeros(self) -> list:
        return [z for z in self.zeros if z.simple]

    def __len__(self) -> int:
        return len(self.zeros)

    def to_dict(self) -> dict:
        return {"zeros": [z.to_dict() for z in self.zeros], "metadata": dict(self.metadata)}


# ---------------------------------------------------------------------------
# stability


def characteristic_polynomial(A) -> np.ndarray:
    """Coefficients of ``det(lambda I - A)``, highest degree first (Faddeev-LeVerrier)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigurationError("matrix must be square")
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def routh_hurwitz(coeffs, rel_tol: float = 1e-9) -> dict:
    """Count right half-plane roots with a Routh table.

    Returns ``{"rhp": int, "boundary": bool}``; ``boundary`` marks roots on
    (or within tolerance of) the imaginary axis, detected from zero roots or
    an all-zero row.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if len(c) == 0:
        return {"rhp": 0, "boundary": True}
    # lambda = rho s with rho a root-size bound, so that A -> c A leaves the
    # normalised coefficients unchanged; rho > 0 keeps the sign pattern
    k = np.arange(len(c))
    rho = np.max(np.abs(c[1:] / c[0]) ** (1.0 / k[1:])) if len(c) > 1 else 1.0
    if rho == 0.0:
        return {"rhp": 0, "boundary": True}
    c = c / (c[0] * rho**k)
    tol = rel_tol
    c = np.trim_zeros(np.where(np.abs(c) <= tol, 0.0, c), "f")
    boundary = False
    # strip roots at the origin
    while len(c) > 1 and c[-1] == 0.0:
        c = c[:-1]
        boundary = True
    deg = len(c) - 1
    if deg <= 0:
        return {"rhp": 0, "boundary": boundary}
    width = deg // 2 + 1
    rows = [np.zeros(width), np.zeros(width)]
    rows[0][: len(c[0::2])] = c[0::2]
    rows[1][: len(c[1::2])] = c[1::2]
    for k in range(2, deg + 1):
        prev, cur = rows[-2], rows[-1]
        if np.all(np.abs(cur) <= tol * max(1.0, np.max(np.abs(prev)))):
            # auxiliary polynomial from prev: symmetric roots about the origin
            boundary = True
            p = deg - (k - 2)
            powers = np.arange(p, -1, -2)
            cur = np.zeros(width)
            nz = powers[: width]
            cur[: len(nz)] = prev[: len(nz)] * nz
            rows[-1] = cur
        if abs(cur[0]) <= tol * max(1.0, np.max(np.abs(cur))):
            cur = cur.copy()
            cur[0] = tol
            rows[-1] = cur
        new = np.zeros(width)
        for j in range(width - 1):
            new[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0]
        m = np.max(np.abs(new))
        if m > 0:
            new = new / m
        rows.append(new)
    first = [r[0] for r in rows[: deg + 1]]
    signs = np.sign([f if abs(f) > 0 else tol for f in first])
    changes = int(np.sum(signs[1:] != signs[:-1]))
    return {"rhp": changes, "boundary": boundary}


def classify_stability(jacobian, rel_tol: float = 1e-9) -> Stability:
    """Sign pattern of the eigenvalue real parts, without computing eigenvalues."""
    J = np.asarray(jacobian, dtype=float)
    if not np.all(np.isfinite(J)):
        return Stability.INDETERMINATE
    res = routh_hurwitz(characteristic_polynomial(J), rel_tol)
    if res["rhp"] > 0:
        return Stability.UNSTABLE
    if res["boundary"]:
        return Stability.INDETERMINATE
    return Stability.STABLE


# ---------------------------------------------------------------------------
# multistart Newton


def _split(X: np.ndarray):
    return X[:, 0], [X[:, i] for i in range(1, X.shape[1])]


def _is_simple(J: np.ndarray, det_tol: float) -> bool:
    if not np.all(np.isfinite(J)):
        return False
    m = J.shape[0]
    norm = np.linalg.norm(J, 2)
    return bool(abs(np.linalg.det(J)) > det_tol * norm ** m) and norm > 0


def _newton(fmap, X0: np.ndarray, tol: float, max_iter: int, bounds: np.ndarray | None = None):
    """Vectorized damped Newton on all starts.  Returns (X, norm).

    Damping uses the natural monotonicity test: a trial point is accepted when
    the simplified correction ``J^{-1} F(trial)`` (old Jacobian) is shorter
    than the full correction.  This is affine invariant, so badly scaled
    components (poles near the domain edge) do not distort the basins.
    Backtracking uses value-only evaluations; starts that leave ``bounds`` or
    stop making progress are abandoned.
    """
    X = X0.copy()
    F = np.moveaxis(fmap.value(*_split(X)), 0, -1)
    norm = np.max(np.abs(F), axis=-1)
    alive = np.isfinite(norm)
    norm = np.where(alive, norm, np.inf)
    for _ in range(max_iter):
        idx = np.flatnonzero(alive & (norm > tol))
        if not len(idx):
            break
        _, J = fmap.value_and_jacobian(*_split(X[idx]))
        J = np.moveaxis(J, (0, 1), (-2, -1))
        Fa = F[idx]
        with np.errstate(all="ignore"):
            ok = np.all(np.isfinite(J), axis=(-2, -1))
            ok[ok] = np.abs(np.linalg.det(J[ok])) > 0
        step = np.zeros_like(Fa)
        if np.any(ok):
            step[ok] = np.linalg.solve(J[ok], -Fa[ok][..., None])[..., 0]
        alive[idx[~ok]] = False
        dnorm = np.linalg.norm(step, axis=-1)
        t = np.ones(len(idx))
        pending = ok.copy()
        for _half in range(16):
            if not np.any(pending):
                break
            pi = np.flatnonzero(pending)
            trial = X[idx[pi]] + t[pi, None] * step[pi]
            Ft = np.moveaxis(fmap.value(*_split(trial)), 0, -1)
            nt = np.max(np.abs(Ft), axis=-1)
            good = np.isfinite(nt) & (trial[:, 0] > 0)
            if np.any(good):
                gsel = np.flatnonzero(good)
                with np.errstate(all="ignore"):
                    simp = np.linalg.solve(J[pi[gsel]], -Ft[gsel][..., None])[..., 0]
                bar = np.linalg.norm(simp, axis=-1)
                good[gsel] = (bar < (1.0 - 0.25 * t[pi[gsel]]) * dnorm[pi[gsel]]) | (nt[gsel] <= tol)
            gi = idx[pi[good]]
            X[gi], F[gi], norm[gi] = trial[good], Ft[good], nt[good]
            pending[pi[good]] = False
            t[pi[~good]] *= 0.5
        alive[idx[pending]] = False
        if bounds is not None:
            alive &= ~np.any((X < bounds[:, 0]) | (X > bounds[:, 1]), axis=-1)
    return X, norm


def _polish(fmap, X: np.ndarray, iters: int):
    """Plain Newton steps on converged points; returns (X, |F|, last step).

    Near a simple zero the step collapses quadratically.  Near a multiple zero
    convergence is linear and the step stays comparable to the distance, which
    is what the simplicity test keys on.
    """
    X = X.copy()
    step = np.full(len(X), np.inf)
    for _ in range(iters + 1):
        F, J = fmap.value_and_jacobian(*_split(X))
        F = np.moveaxis(F, 0, -1)
        J = np.moveaxis(J, (0, 1), (-2, -1))
        with np.errstate(all="ignore"):
            ok = np.all(np.isfinite(J), axis=(-2, -1)) & np.all(np.isfinite(F), axis=-1)
            ok[ok] = np.abs(np.linalg.det(J[ok])) > 0
        dx = np.full_like(X, np.inf)
        if np.any(ok):
            dx[ok] = np.linalg.solve(J[ok], -F[ok][..., None])[..., 0]
        step = np.max(np.abs(dx), axis=-1)
        done = step <= STEP_TOL * np.maximum(1.0, np.max(np.abs(X), axis=-1))
        move = ok & ~done & (X[:, 0] + dx[:, 0] > 0)
        if not np.any(move) or _ == iters:
            break
        X[move] += dx[move]
    norm = np.max(np.abs(F), axis=-1)
    return X, norm, step


def _dedup(points: np.ndarray, radius: float) -> list[int]:
    order = np.lexsort(points.T[::-1])
    kept: list[int] = []
    for i in order:
        if all(np.linalg.norm(points[i] - points[k]) > radius for k in kept):
            kept.append(int(i))
    return kept


def find_zeros(
    amap,
    box: SearchBox,
    *,
    newton_tol: float = NEWTON_TOL,
    dedup_radius: float = DEDUP_RADIUS,
    det_tol: float = DET_TOL,
    max_iter: int = 60,
    check_doubled: bool = True,
) -> ZeroReport:
    """Multistart damped Newton from every grid node of ``box``.

    ``amap`` is an :class:`AveragedMap` (its ``order`` selects gbar0 or
    rho_bar) or any object with ``dim``, ``order`` and
    ``value_and_jacobian(r, z)``.
    """
    m = amap.dim
    if len(box.z_ranges) != m - 1:
        raise ConfigurationError(f"search box needs {m - 1} z ranges")
    starts = box.nodes()
    meta = {
        "box": box.to_dict(),
        "starts": int(len(starts)),
        "newton_tol": newton_tol,
        "dedup_radius": dedup_radius,
        "det_tol": det_tol,
        "order": getattr(amap, "order", 1),
    }
    order = meta["order"]

    if order == 2 and isinstance(amap, AveragedMap):
        gate = amap.check_order2_gate(box.r_range, box.z_ranges)
        meta["order2_gate"] = gate
        if not gate["passed"]:
            meta["status"] = "order-2 not applicable: first-order function is not identically zero"
            return ZeroReport([], meta)

    vals = amap.value(*_split(starts))
    finite = np.isfinite(vals)
    sup = float(np.max(np.abs(vals[finite]))) if np.any(finite) else 0.0
    meta["sup_on_grid"] = sup
    if sup < IDENTICALLY_ZERO_TOL:
        meta["status"] = "identically zero at tolerance"
        meta["identically_zero"] = True
        if order == 1:
            meta["hint"] = "use order 2"
        return ZeroReport([], meta)
    meta["identically_zero"] = False

    b = box.bounds
    width = b[:, 1] - b[:, 0]
    far = np.stack([b[:, 0] - width, b[:, 1] + width], -1)
    X, norm = _newton(amap, starts, newton_tol, max_iter, far)
    conv = norm <= newton_tol
    meta["converged_starts"] = int(np.sum(conv))
    meta["nonconverged_starts"] = int(len(starts) - np.sum(conv))
    inside = conv & box.contains(X, slack=1e-12) & (X[:, 0] > box.r_range[0])
    meta["outside_box"] = int(np.sum(conv & ~inside))
    pts = X[inside]
    res = norm[inside]
    steps = np.zeros(0)
    if len(pts):
        pts, res, steps = _polish(amap, pts, POLISH_ITER)
        ok = (res <= newton_tol) & box.contains(pts, slack=1e-12) & (pts[:, 0] > box.r_range[0])
        pts, res, steps = pts[ok], res[ok], steps[ok]
    keep = _dedup(pts, dedup_radius) if len(pts) else []
    pts, res, steps = pts[keep], res[keep], steps[keep]

    zeros = []
    if len(pts):
        _, Jall = amap.value_and_jacobian(*_split(pts))
        Jall = np.moveaxis(Jall, (0, 1), (-2, -1))
        dbl = None
        if check_doubled and hasattr(amap, "doubled"):
            dbl = np.max(np.abs(amap.doubled().value(*_split(pts), strict=False)), axis=0)
        inU = _in_U(amap, pts)
        for k, (p, rr, Jk) in enumerate(zip(pts, res, Jall)):
            settled = steps[k] <= STEP_TOL * max(1.0, float(np.max(np.abs(p))))
            z = Zero(
                point=p.copy(),
                residual=float(rr),
                jacobian=Jk.copy(),
                simple=_is_simple(Jk, det_tol) and bool(settled),
                stability=classify_stability(Jk),
                order=order,
                residual_doubled=float(dbl[k]) if dbl is not None else float("nan"),
                in_U=bool(inU[k]),
                newton_step=float(steps[k]),
            )
            zeros.append(z)
    meta["status"] = "ok"
    return ZeroReport(zeros, meta)


def _in_U(amap, pts: np.ndarray) -> np.ndarray:
    sf = getattr(amap, "sf", None)
    if sf is None:
        return np.ones(len(pts), dtype=bool)
    chart = sf.chart
    y = [pts[:, 0], np.zeros(len(pts))] + [pts[:, i] for i in range(1, pts.shape[1])]
    x, bad = chart._inverse_values([np.asarray(v, float) for v in y], strict=False)
    return ~np.asarray(bad)


# ---------------------------------------------------------------------------
# behaviour near r = 0


class _ReducedMap:
    """``ghat_i = gbar0_i / r^{p_i}`` with its Jacobian."""

    def __init__(self, amap: AveragedMap, powers: Sequence[int]):
        self.amap = amap
        self.powers = np.asarray(powers, dtype=float)
        self.dim = amap.dim
        self.order = 1

    def _scale(self, r):
        return r[None] ** self.powers.reshape((-1,) + (1,) * np.ndim(r))

    def value(self, r, z=()):
        r = np.asarray(r, float)
        return self.amap.gbar0(r, z, strict=False) / self._scale(r)

    def value_and_jacobian(self, r, z=()):
        r = np.asarray(r, float)
        g, J = self.amap.gbar0_jacobian(r, z, strict=False)
        s = self._scale(r)
        p = self.powers.reshape((-1,) + (1,) * np.ndim(r))
        gh = g / s
        Jh = J / s[:, None]
        Jh[:, 0] = Jh[:, 0] - p * gh / r
        return gh, Jh


@dataclass
class SmallAmplitudeReport:
    leading_powers: tuple
    radii: tuple
    ghat_origin: tuple
    extrapolation_error: float
    converged: bool
    z_profile: dict
    zero_count: int
    zeros: list
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "leading_powers": list(self.leading_powers),
            "radii": list(self.radii),
            "ghat_origin": list(self.ghat_origin),
            "extrapolation_error": self.extrapolation_error,
            "converged": self.converged,
            "z_profile": self.z_profile,
            "zero_count": self.zero_count,
            "zeros": [z.to_dict() for z in self.zeros],
            "notes": list(self.notes),
        }


def _richardson(vals: np.ndarray, q: np.ndarray):
    """Two-level Richardson for samples at h, h/2, h/4 with error series in h^q, h^{2q}."""
    f0, f1, f2 = vals
    a = 2.0 ** q
    b = 2.0 ** (2 * q)
    r1 = (a * f1 - f0) / (a - 1)
    r2 = (a * f2 - f1) / (a - 1)
    return (b * r2 - r1) / (b - 1), r2


def local_small_amplitude_scan(
    amap: AveragedMap,
    r_max: float = 0.3,
    z_box: tuple = (-0.3, 0.3),
    *,
    leading_powers: Sequence[int] | None = None,
    z_points: int = 7,
    grid: int = 7,
    tol: float = 1e-4,
) -> SmallAmplitudeReport:
    """Extrapolate the reduced function to ``r = 0`` and count zeros near the origin.

    The r-odd/even structure of the averaged function (``gbar0_r`` odd in r,
    ``gbar0_z`` even) decides whether the error series runs in ``r`` or ``r^2``.
    """
    m = amap.dim
    powers = tuple(int(p) for p in (leading_powers or (0,) * m))
    if len(powers) != m:
        raise ConfigurationError(f"need {m} leading powers")
    red = _ReducedMap(amap, powers)
    q = np.array([2.0 if (p % 2 == (1 if i == 0 else 0)) else 1.0 for i, p in enumerate(powers)])
    radii = (r_max, r_max / 2, r_max / 4)
    zs = np.linspace(z_box[0], z_box[1], z_points)
    if 0.0 not in zs:
        zs = np.sort(np.append(zs, 0.0))
    R = np.repeat(np.array(radii)[:, None], len(zs), axis=1)
    Z = np.broadcast_to(zs, R.shape)
    zlist = [Z] + [np.zeros_like(R)] * (m - 2)
    vals = red.value(R, zlist)  # (m, 3, nz)
    est, coarse = _richardson(np.moveaxis(vals, 1, 0), q[:, None])
    err = float(np.nanmax(np.abs(est - coarse)))
    i0 = int(np.argmin(np.abs(zs)))
    ghat0 = tuple(float(v) for v in est[:, i0])
    notes = []
    converged = bool(np.isfinite(err) and err <= tol)
    if not converged:
        notes.append(f"extrapolation did not settle: successive estimates differ by {err:.3g}")
    box = SearchBox((r_max / 20, r_max), tuple([tuple(z_box)] + [(-r_max, r_max)] * (m - 2)), grid)
    rep = find_zeros(red, box, check_doubled=False)
    return SmallAmplitudeReport(
        leading_powers=powers,
        radii=radii,
        ghat_origin=ghat0,
        extrapolation_error=err,
        converged=converged,
        z_profile={"z": zs.tolist(), "ghat": est.tolist()},
        zero_count=len(rep.simple_zeros),
        zeros=rep.simple_zeros,
        notes=notes,
    )
