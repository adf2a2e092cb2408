"""Embedded Dormand-Prince 5(4) integrator with PI step control and dense output."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, IntegrationError

__all__ = ["IntegratorConfig", "Solution", "dopri45"]

# Butcher tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

# continuous extension: y(t + s h) = y + h * K^T P [s, s^2, s^3, s^4]
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
ALPHA = 0.17  # PI exponents (Gustafsson-style, as in dopri5)
BETA = 0.04
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 100_000
    method: str = "dopri5(4)"

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigurationError("integrator tolerances must be positive")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be positive")

    def to_dict(self) -> dict:
        return {"rtol": self.rtol, "atol": self.atol, "max_steps": self.max_steps, "method": self.method}


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # (steps + 1, d)
    nfev: int
    steps: int
    rejected: int
    _segments: list = field(default_factory=list, repr=False)

    def __call__(self, t) -> np.ndarray:
        """Dense output (4th order) at ``t`` inside the integration span."""
        t = np.atleast_1d(np.asarray(t, float))
        out = np.empty((len(t), self.y.shape[1]))
        direction = np.sign(self.t[-1] - self.t[0]) or 1.0
        ts = direction * self.t
        for k, tk in enumerate(t):
            i = int(np.clip(np.searchsorted(ts, direction * tk, side="right") - 1, 0, len(self.t) - 2))
            t0, h, y0, Q = self._segments[i]
            s = (tk - t0) / h
            out[k] = y0 + h * Q @ np.array([s, s * s, s ** 3, s ** 4])
        return out

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]


def _norm(err, y0, y1, rtol, atol) -> float:
    sc = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol, span) -> float:
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    if not np.all(np.isfinite(f1)):
        return h0 * 1e-3
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def dopri45(
    f: Callable,
    t0: float,
    t1: float,
    y0,
    config: IntegratorConfig | None = None,
) -> Solution:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1``.

    ``f`` may return non-finite values where it is undefined; such trial steps
    are rejected and retried with a smaller step.  Raises
    :class:`IntegrationError` on step-count exhaustion or step-size collapse.
    """
    cfg = config or IntegratorConfig()
    y = np.array(y0, dtype=float)
    span = abs(t1 - t0)
    if span == 0.0:
        return Solution(np.array([t0]), y[None, :].copy(), 0, 0, 0, [])
    direction = 1.0 if t1 > t0 else -1.0
    nfev = 1
    fy = np.asarray(f(t0, y), float)
    if not np.all(np.isfinite(fy)):
        raise IntegrationError("right-hand side undefined at the initial point", theta=t0)
    h = _initial_step(f, t0, y, fy, direction, cfg.rtol, cfg.atol, span)
    nfev += 1
    t = t0
    ts, ys, segs = [t0], [y.copy()], []
    steps = rejected = 0
    err_prev = 1e-4
    hmin = 1e-14 * max(1.0, abs(t0), abs(t1))
    K = np.empty((7, y.size))
    while direction * (t1 - t) > 0:
        if steps + rejected >= cfg.max_steps:
            raise IntegrationError(f"step budget {cfg.max_steps} exhausted", theta=t)
        h = min(h, abs(t1 - t))
        last = h >= abs(t1 - t) * (1 - 1e-13)
        if last:
            h = abs(t1 - t)
        hs = direction * h
        K[0] = fy
        ok = True
        for i in range(1, 7):
            yi = y + hs * (np.asarray(A[i]) @ K[:i])
            ki = np.asarray(f(t + C[i] * hs, yi), float)
            nfev += 1
            if not np.all(np.isfinite(ki)):
                ok = False
                break
            K[i] = ki
        if ok:
            ynew = y + hs * (B5 @ K)
            err = _norm(hs * (E @ K), y, ynew, cfg.rtol, cfg.atol)
            ok = np.isfinite(err)
        if not ok:
            rejected += 1
            h *= 0.25
            if h < hmin:
                raise IntegrationError("step size collapsed where the right-hand side is undefined", theta=t)
            continue
        if err <= 1.0:
            segs.append((t, hs, y.copy(), K.T @ P))
            t = t1 if last else t + hs
            y = ynew
            fy = K[6].copy()
            ts.append(t)
            ys.append(y.copy())
            steps += 1
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err ** (-ALPHA) * err_prev ** BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
            h *= factor
        else:
            rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err ** (-ALPHA))
            if h < hmin:
                raise IntegrationError("step size collapsed", theta=t)
    return Solution(np.array(ts), np.array(ys), nfev, steps, rejected, segs)
