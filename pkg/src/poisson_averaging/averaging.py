"""First- and second-order averaged functions by periodic quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, QuadratureError
from .reduction import StandardForm

__all__ = [
    "QuadratureConfig",
    "AveragedMap",
    "fourier_antiderivative",
    "theta_moment",
    "ORDER2_GATE_TOL",
]

ORDER2_GATE_TOL = 1e-9


@dataclass(frozen=True)
class QuadratureConfig:
    nodes: int = 256
    tol: float = 1e-10
    max_doublings: int = 6

    def __post_init__(self):
        n = int(self.nodes)
        if n < 8 or n & (n - 1):
            raise ConfigurationError("nodes must be a power of two and at least 8")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_doublings < 0:
            raise ConfigurationError("max_doublings must be non-negative")

    def to_dict(self) -> dict:
        return {"nodes": self.nodes, "tol": self.tol, "max_doublings": self.max_doublings}


def _nodes(N: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(N) / N


def _modes(samples: np.ndarray):
    N = samples.shape[-1]
    C = np.fft.fft(samples, axis=-1) / N
    k = np.fft.fftfreq(N, 1.0 / N)
    return C, k


def fourier_antiderivative(samples: np.ndarray):
    """Antiderivative from 0 of a periodic function sampled on uniform nodes.

    Returns ``(periodic, mean)``: ``int_0^theta f = mean * theta + periodic(theta)``,
    with ``periodic`` given at the same nodes.  Exact for trigonometric
    polynomials below the Nyquist frequency (which is dropped).
    """
    samples = np.asarray(samples, dtype=float)
    N = samples.shape[-1]
    C, k = _modes(samples)
    keep = (k != 0) & (np.abs(k) != N // 2)
    A = np.zeros_like(C)
    A[..., keep] = C[..., keep] / (1j * k[keep])
    periodic = N * np.fft.ifft(A, axis=-1) - A.sum(axis=-1, keepdims=True)
    return periodic.real, C[..., 0].real


def theta_moment(samples: np.ndarray) -> np.ndarray:
    """``(1/2pi) int_0^{2pi} theta f(theta) dtheta`` from uniform samples of periodic ``f``."""
    samples = np.asarray(samples, dtype=float)
    N = samples.shape[-1]
    C, k = _modes(samples)
    keep = (k != 0) & (np.abs(k) != N // 2)
    out = np.pi * C[..., 0] + (C[..., keep] / (1j * k[keep])).sum(axis=-1)
    return out.real


def _interleave(even: np.ndarray, odd: np.ndarray) -> np.ndarray:
    out = np.empty(even.shape[:-1] + (2 * even.shape[-1],), dtype=even.dtype)
    out[..., 0::2] = even
    out[..., 1::2] = odd
    return out


@dataclass
class AveragedMap:
    """``gbar0`` and ``rho_bar`` of a standard form.

    Batch inputs: ``r`` is an array and ``z`` a list of ``n - 2`` arrays, all
    broadcast together; results carry the component axis first.  Direct
    evaluators raise on domain or quadrature failure; with ``strict=False``
    (the default of ``value``/``value_and_jacobian``, used by the root search)
    such points give NaN instead.
    """

    sf: StandardForm
    config: QuadratureConfig | None = None
    order: int = 1
    gate_report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.config is None:
            self.config = QuadratureConfig()
        if self.order not in (1, 2):
            raise ConfigurationError("order must be 1 or 2")

    @property
    def dim(self) -> int:
        return self.sf.dim

    def _prep(self, r, z):
        """Flatten the broadcast batch to ``(B, 1)`` columns (theta goes last)."""
        z = list(z) if z is not None else []
        if len(z) != self.sf.n - 2:
            raise ConfigurationError(f"expected {self.sf.n - 2} z-coordinates, got {len(z)}")
        arrs = [np.asarray(r, float)] + [np.asarray(v, float) for v in z]
        shape = np.broadcast_shapes(*(a.shape for a in arrs))
        cols = [np.broadcast_to(a, shape).reshape(-1, 1) for a in arrs]
        return cols[0], cols[1:], shape

    def _converge(self, sample, reduce, B: int, strict: bool):
        """Per-point doubling loop.

        ``sample(theta, idx)`` returns integrand arrays whose last two axes are
        (batch subset, nodes); ``reduce`` averages them into ``(..., batch)``.
        Points whose integrand is undefined come back as NaN.  Points that do
        not settle raise unless ``strict`` is false, in which case they are NaN.
        """
        cfg = self.config
        N = cfg.nodes
        active = np.arange(B)
        samples = sample(_nodes(N), active)
        value = reduce(samples)
        out = np.full(value.shape, np.nan)
        delta = np.full(B, np.inf)
        for _ in range(cfg.max_doublings):
            new = sample(_nodes(2 * N)[1::2], active)
            samples = tuple(_interleave(a, b) for a, b in zip(samples, new))
            nxt = reduce(samples)
            with np.errstate(invalid="ignore"):
                d = np.max(np.abs(nxt - value).reshape(-1, len(active)), axis=0)
            delta[active] = d
            done = d < cfg.tol
            undefined = ~np.isfinite(d)
            out[..., active[done]] = nxt[..., done]
            keep = ~(done | undefined)
            active = active[keep]
            if not len(active):
                return out
            samples = tuple(a[..., keep, :] for a in samples)
            value = nxt[..., keep]
            N *= 2
        if strict:
            raise QuadratureError(
                f"averaging did not converge after {cfg.max_doublings} doublings "
                f"at {len(active)} point(s)",
                delta=float(np.max(delta[active])),
            )
        return out

    # first order -----------------------------------------------------------

    def gbar0(self, r, z=(), strict: bool = True) -> np.ndarray:
        """Average of ``g0`` over one period; shape ``(n - 1,) + batch``."""
        r, z, shape = self._prep(r, z)

        def sample(theta, idx):
            return (self.sf.G(theta, r[idx], [v[idx] for v in z], 0.0, strict=strict),)

        out = self._converge(sample, lambda s: s[0].mean(axis=-1), len(r), strict)
        return out.reshape((self.dim,) + shape)

    def gbar0_jacobian(self, r, z=(), strict: bool = True):
        """``(gbar0, D gbar0)`` with shapes ``(m,) + batch`` and ``(m, m) + batch``."""
        r, z, shape = self._prep(r, z)
        m = self.dim

        def sample(theta, idx):
            return self.sf.g0_jacobian(theta, r[idx], [v[idx] for v in z], strict=strict)

        def reduce(s):
            g, D = s[0].mean(axis=-1), s[1].mean(axis=-1)
            return np.concatenate([g, D.reshape((m * m,) + g.shape[1:])])

        out = self._converge(sample, reduce, len(r), strict)
        return out[:m].reshape((m,) + shape), out[m:].reshape((m, m) + shape)

    def inner_antiderivative(self, r, z=(), strict: bool = True):
        """Evaluator ``theta -> int_0^theta g0(s, r, z) ds`` (scalar point).

        Built from the Fourier modes of ``g0`` at the converged node count.
        """
        r_, z_, shape = self._prep(r, z)
        if len(r_) != 1:
            raise ConfigurationError("inner_antiderivative takes a single point")
        self.gbar0(r, z, strict=True)  # raises if the quadrature does not converge
        N = 4 * self.config.nodes
        samples = self.sf.G(_nodes(N), r_[0], [v[0] for v in z_], 0.0, strict=True)
        return _antiderivative_evaluator(samples)

    # second order ----------------------------------------------------------

    def rho_bar(self, r, z=(), strict: bool = True) -> np.ndarray:
        """Average of ``D g0 . int_0^theta g0 + g1``."""
        r, z, shape = self._prep(r, z)

        def sample(theta, idx):
            return self.sf.jet_rhs(theta, r[idx], [v[idx] for v in z], strict=strict)

        def reduce(s):
            g0, Dg0, g1 = s
            periodic, mean = fourier_antiderivative(g0)
            term = np.einsum("ijbk,jbk->ibk", Dg0, periodic).mean(axis=-1)
            term = term + np.einsum("ijb,jb->ib", theta_moment(Dg0), mean)
            return term + g1.mean(axis=-1)

        out = self._converge(sample, reduce, len(r), strict)
        return out.reshape((self.dim,) + shape)

    def rho_bar_jacobian(self, r, z=(), strict: bool = True, step: float = 1e-6):
        """Central differences of ``rho_bar`` (the exact Jacobian would need third derivatives)."""
        r = np.asarray(r, float)
        z = [np.asarray(v, float) for v in z]
        coords = [r] + z
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        coords = [np.broadcast_to(c, shape) for c in coords]
        m = self.dim
        base = self.rho_bar(coords[0], coords[1:], strict)
        jac = np.empty((m, m) + shape)
        for j in range(m):
            h = step * np.maximum(1.0, np.abs(coords[j]))
            up = [c + h if i == j else c for i, c in enumerate(coords)]
            dn = [c - h if i == j else c for i, c in enumerate(coords)]
            jac[:, j] = (self.rho_bar(up[0], up[1:], strict) - self.rho_bar(dn[0], dn[1:], strict)) / (2 * h)
        return base, jac

    def check_order2_gate(self, r_range, z_ranges, grid: int = 5) -> dict:
        """Probe ``gbar0`` on a ``grid^(n-1)`` lattice; order 2 needs max |gbar0| < 1e-9."""
        axes = [np.linspace(lo, hi, grid) for lo, hi in [tuple(r_range)] + [tuple(b) for b in z_ranges]]
        mesh = np.meshgrid(*axes, indexing="ij")
        g = self.gbar0(mesh[0].ravel(), [m.ravel() for m in mesh[1:]], strict=False)
        finite = np.isfinite(g)
        worst = float(np.max(np.abs(g[finite]))) if np.any(finite) else 0.0
        self.gate_report = {
            "probe_grid": grid,
            "max_abs_gbar0": worst,
            "threshold": ORDER2_GATE_TOL,
            "passed": worst < ORDER2_GATE_TOL,
        }
        return dict(self.gate_report)

    # dispatch --------------------------------------------------------------

    def value(self, r, z=(), strict: bool = False) -> np.ndarray:
        return self.gbar0(r, z, strict) if self.order == 1 else self.rho_bar(r, z, strict)

    def value_and_jacobian(self, r, z=(), strict: bool = False):
        if self.order == 1:
            return self.gbar0_jacobian(r, z, strict)
        return self.rho_bar_jacobian(r, z, strict)

    def doubled(self) -> "AveragedMap":
        """Same map with twice the starting node count."""
        cfg = self.config
        return AveragedMap(self.sf, QuadratureConfig(2 * cfg.nodes, cfg.tol, cfg.max_doublings), self.order)


def _antiderivative_evaluator(samples: np.ndarray):
    samples = np.asarray(samples, float)
    N = samples.shape[-1]
    C, k = _modes(samples)
    keep = (k != 0) & (np.abs(k) != N // 2)
    A = C[..., keep] / (1j * k[keep])
    kk = k[keep]
    mean = C[..., 0].real
    offset = A.sum(axis=-1)

    def F(theta):
        theta = np.asarray(theta, float)
        ph = np.exp(1j * np.multiply.outer(theta, kk))
        per = np.tensordot(A, ph, axes=([-1], [-1])) - offset.reshape(offset.shape + (1,) * theta.ndim)
        return per.real + np.multiply.outer(mean, theta)

    return F
