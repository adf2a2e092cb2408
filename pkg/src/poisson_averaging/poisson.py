"""Unperturbed rank-2 Poisson systems and their analytic perturbations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .jets import Jet, ScalarField, VectorField, primal, seed
from .poly import SparsePoly

__all__ = [
    "PoissonSpec",
    "PerturbedSpec",
    "ValidationReport",
    "darboux_matrix",
    "hamiltonian",
    "structure_matrix",
    "structure_entries",
    "validate_poisson",
    "numerical_rank",
    "poly_vector_field",
]

DEFAULT_SEED = 0x5EED


def darboux_matrix(n: int) -> np.ndarray:
    """The constant rank-2 Darboux matrix: a 2x2 symplectic block plus zeros."""
    jd = np.zeros((n, n))
    jd[0, 1] = 1.0
    jd[1, 0] = -1.0
    return jd


def _constant_matrix_field(mat: np.ndarray) -> Callable:
    rows = [[float(v) for v in row] for row in np.asarray(mat, dtype=float)]
    return lambda x: [list(r) for r in rows]


@dataclass(frozen=True)
class PoissonSpec:
    """The unperturbed system ``dx/dt = I(x) J0(x) grad H(x)``.

    ``J0`` maps a coordinate list to an ``n x n`` nested list (entries may be
    numbers or jets).  ``h`` holds the Hamiltonian factors and ``phi`` the
    Casimir offsets, so that ``H = (x1^2 h1^2 + x2^2 h2^2) / 2`` and
    ``D_j = x_j + phi_j``.
    """

    n: int
    J0: Callable
    I: ScalarField
    h: tuple
    phi: tuple
    domain_hint: np.ndarray = None

    def __post_init__(self):
        n = self.n
        if n < 3:
            raise ConfigurationError("dimension must be at least 3")
        if len(self.h) != 2:
            raise ConfigurationError("exactly two Hamiltonian factors h1, h2 are required")
        if len(self.phi) != n - 2:
            raise ConfigurationError(f"expected {n - 2} Casimir offsets, got {len(self.phi)}")
        box = self.domain_hint
        box = np.tile([-1.0, 1.0], (n, 1)) if box is None else np.asarray(box, dtype=float)
        if box.shape != (n, 2) or np.any(box[:, 0] > 0) or np.any(box[:, 1] < 0):
            raise ConfigurationError("domain_hint must be an (n, 2) box containing the origin")
        object.__setattr__(self, "domain_hint", box)
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "phi", tuple(self.phi))
        origin = [0.0] * n
        for i, hi in enumerate(self.h, start=1):
            v = float(primal(hi(origin)))
            if abs(v - 1.0) > 1e-12:
                raise ConfigurationError(f"h{i}(0) = {v}, must equal 1")
        jets = seed(origin)
        for j, ph in enumerate(self.phi, start=3):
            out = ph(jets)
            if not isinstance(out, Jet):
                val, grad = float(out), [0.0] * n
            else:
                val, grad = float(out.value), [float(g) for g in out.partials]
            if abs(val) > 1e-12 or max(abs(g) for g in grad) > 1e-12:
                raise ConfigurationError(f"phi_{j} must vanish with its gradient at the origin")

    @classmethod
    def constant_structure(cls, mat, *, I=None, h=None, phi=None, domain_hint=None):
        mat = np.asarray(mat, dtype=float)
        n = mat.shape[0]
        one = ScalarField.constant(1.0, n)
        zero = ScalarField.constant(0.0, n)
        return cls(
            n=n,
            J0=_constant_matrix_field(mat),
            I=I or one,
            h=h or (one, one),
            phi=phi or tuple(zero for _ in range(n - 2)),
            domain_hint=domain_hint,
        )

    def casimir(self, j: int, x):
        """``D_j(x) = x_j + phi_j(x)`` for ``j = 3..n`` (1-based)."""
        return x[j - 1] + self.phi[j - 3](x)

    def sample_points(self, count: int, seed_value: int = DEFAULT_SEED) -> np.ndarray:
        rng = np.random.default_rng(seed_value)
        lo, hi = self.domain_hint[:, 0], self.domain_hint[:, 1]
        return lo + (hi - lo) * rng.random((count, self.n))


def hamiltonian(spec: PoissonSpec) -> ScalarField:
    h1, h2 = spec.h

    def H(x):
        a = x[0] * h1(x)
        b = x[1] * h2(x)
        return 0.5 * (a * a + b * b)

    return ScalarField(H, spec.n, name="H")


def structure_entries(spec: PoissonSpec, x) -> list[list]:
    """``I(x) J0(x)`` as a nested list; entries follow the jet level of ``x``."""
    I = spec.I(x)
    return [[I * e for e in row] for row in spec.J0(x)]


def structure_matrix(spec: PoissonSpec, x) -> np.ndarray:
    """Numeric structure matrix ``J(x) = I(x) J0(x)`` at a single point."""
    x = [float(v) for v in x]
    I = float(primal(spec.I(x)))
    if I == 0.0:
        raise DomainError(f"first integral I vanishes at {x}")
    J0 = np.array([[float(primal(e)) for e in row] for row in spec.J0(x)])
    return I * J0


def numerical_rank(mat: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Rank by Gaussian elimination with partial pivoting; pivots below
    ``rel_tol * max|mat|`` count as zero."""
    a = np.array(mat, dtype=float)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return 0
    tol = rel_tol * scale
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        p = rank + int(np.argmax(np.abs(a[rank:, c])))
        if abs(a[p, c]) <= tol:
            continue
        a[[rank, p]] = a[[p, rank]]
        a[rank + 1 :] -= np.outer(a[rank + 1 :, c] / a[rank, c], a[rank])
        rank += 1
    return rank


@dataclass
class ValidationReport:
    valid: bool
    sample_count: int
    max_residual: dict = field(default_factory=dict)
    ranks: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        keys = set(self.max_residual) | set(other.max_residual)
        return ValidationReport(
            valid=self.valid and other.valid,
            sample_count=self.sample_count + other.sample_count,
            max_residual={
                k: max(self.max_residual.get(k, 0.0), other.max_residual.get(k, 0.0))
                for k in sorted(keys)
            },
            ranks=self.ranks + other.ranks,
            failures=self.failures + other.failures,
        )

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "sample_count": self.sample_count,
            "max_residual": dict(self.max_residual),
            "failures": list(self.failures),
        }


def _partials_tensor(entry, n, shape):
    """Partial derivatives of a (possibly constant) jet entry as an (n, S) array."""
    if isinstance(entry, Jet):
        return np.stack([np.broadcast_to(np.asarray(p, float), shape) for p in entry.partials])
    return np.zeros((n,) + shape)


def _value_array(entry, shape):
    return np.broadcast_to(np.asarray(primal(entry), float), shape)


def _validate_one(spec: PoissonSpec, x: np.ndarray, tol: float) -> ValidationReport:
    n = spec.n
    shape = ()
    xj = seed([float(v) for v in x])
    Jent = structure_entries(spec, xj)
    J = np.array([[float(_value_array(e, shape)) for e in row] for row in Jent])
    dJ = np.array([[_partials_tensor(e, n, shape) for e in row] for row in Jent])  # (i, j, l)

    res = {}
    res["antisymmetry"] = float(np.max(np.abs(J + J.T)))

    I_val = float(primal(spec.I([float(v) for v in x])))
    res["nonvanishing_I"] = 0.0 if I_val != 0.0 else 1.0

    # Jacobi: sum_l J_il d_l J_jk + J_jl d_l J_ki + J_kl d_l J_ij
    jac = (
        np.einsum("il,jkl->ijk", J, dJ)
        + np.einsum("jl,kil->ijk", J, dJ)
        + np.einsum("kl,ijl->ijk", J, dJ)
    )
    res["jacobi"] = float(np.max(np.abs(jac)))

    cas = 0.0
    for j in range(3, n + 1):
        D = spec.casimir(j, xj)
        grad = np.array([float(p) for p in D.partials]) if isinstance(D, Jet) else np.zeros(n)
        cas = max(cas, float(np.max(np.abs(J @ grad))))
    res["casimir"] = cas

    Hj = hamiltonian(spec)(xj)
    gH = np.array([float(p) for p in Hj.partials])
    res["hamiltonian_first_integral"] = abs(float(gH @ J @ gH))

    rank = numerical_rank(J)
    failures = []
    limits = {
        "antisymmetry": tol,
        "nonvanishing_I": 0.5,
        "jacobi": tol,
        "casimir": tol,
        "hamiltonian_first_integral": 1e-10,
    }
    for name, lim in limits.items():
        if not res[name] <= lim:
            failures.append({"check": name, "point": x.tolist(), "value": res[name]})
    if rank != 2:
        failures.append({"check": "rank", "point": x.tolist(), "value": rank})
    return ValidationReport(
        valid=not failures, sample_count=1, max_residual=res, ranks=[rank], failures=failures
    )


def validate_poisson(
    spec: PoissonSpec, sample_count: int = 50, *, seed_value: int = DEFAULT_SEED, tol: float = 1e-8
) -> ValidationReport:
    """Check antisymmetry, rank 2, the Jacobi identity and the Casimir property
    at ``sample_count`` random points of ``spec.domain_hint`` plus the origin."""
    if sample_count < 1:
        raise ConfigurationError("sample_count must be >= 1")
    pts = spec.sample_points(sample_count, seed_value)
    report = None
    for x in pts:
        r = _validate_one(spec, x, tol)
        report = r if report is None else report.merge(r)
    return report


@dataclass(frozen=True)
class PerturbedSpec:
    """``dx/dt = J(x) grad H(x) + eps F(x; eps)`` with ``F`` of arity ``n + 1``."""

    base: PoissonSpec
    F: VectorField
    epsilon: float = 0.0

    def __post_init__(self):
        n = self.base.n
        if self.F.arity != n + 1 or self.F.dim != n:
            raise ConfigurationError(
                f"perturbation must map {n}+1 coordinates to {n} components"
            )
        eps_samples = sorted({0.0, float(self.epsilon), 0.5 * float(self.epsilon), -float(self.epsilon), 0.1})
        for e in eps_samples:
            out = self.F(seed([0.0] * n, m=n) + [e])
            for k, comp in enumerate(out, start=1):
                if isinstance(comp, Jet):
                    val = abs(float(primal(comp)))
                    grad = max(abs(float(primal(p))) for p in comp.partials)
                else:
                    val, grad = abs(float(primal(comp))), 0.0
                if val > 1e-12 or grad > 1e-12:
                    raise ConfigurationError(
                        f"F_{k} must vanish with its x-gradient at the origin (eps={e})"
                    )

    def with_epsilon(self, eps: float) -> "PerturbedSpec":
        return PerturbedSpec(self.base, self.F, eps)


def poly_vector_field(polys: Sequence[SparsePoly], n: int) -> VectorField:
    """Wrap polynomial components as a perturbation field of arity ``n + 1``.

    Each polynomial has arity ``n`` (independent of eps) or ``n + 1`` (the last
    variable is eps).
    """
    polys = list(polys)
    if len(polys) != n:
        raise ConfigurationError(f"expected {n} perturbation components, got {len(polys)}")
    for p in polys:
        if p.arity not in (n, n + 1):
            raise ConfigurationError(
                f"perturbation polynomial has arity {p.arity}; expected {n} or {n + 1}"
            )

    def F(x):
        xs = x[:n]
        return [p(xs) if p.arity == n else p(x) for p in polys]

    return VectorField(F, n + 1, n, name="F")
