"""Sparse multivariate polynomials with jet-aware evaluation."""

from __future__ import annotations

import json
import math
from typing import Mapping, Sequence

import numpy as np

from ._kernels import poly_eval_batch
from .errors import ConfigurationError
from .jets import Jet, level

__all__ = ["SparsePoly", "poly_eval", "poly_partial_at_zero"]


class SparsePoly:
    """Polynomial ``sum c * x1**n1 * ... * xd**nd`` stored as ``{(n1, ..., nd): c}``.

    Zero coefficients are dropped at construction.  Instances are immutable and
    callable on a list of coordinates (numbers, arrays or jets), so they can be
    used wherever a scalar field is expected.
    """

    __slots__ = ("terms", "arity", "_exps", "_coeffs", "_derivs")

    def __init__(self, terms: Mapping[Sequence[int], float], arity: int):
        self.arity = int(arity)
        clean = {}
        for exps, c in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.arity:
                raise ConfigurationError(
                    f"exponent {exps} has {len(exps)} entries, polynomial arity is {self.arity}"
                )
            if any(e < 0 for e in exps):
                raise ConfigurationError(f"negative exponent in {exps}")
            c = float(c)
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
        self.terms = {k: v for k, v in sorted(clean.items()) if v != 0.0}
        self._exps = np.array(list(self.terms), dtype=np.int64).reshape(-1, self.arity)
        self._coeffs = np.array(list(self.terms.values()), dtype=np.float64)
        self._derivs: dict[int, SparsePoly] = {}

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, arity: int) -> "SparsePoly":
        return cls({}, arity)

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: float = 1.0) -> "SparsePoly":
        return cls({tuple(exps): coeff}, len(exps))

    @classmethod
    def from_json(cls, obj: Mapping[str, float] | str, arity: int) -> "SparsePoly":
        """Parse ``{"n1 n2 n3": coeff}``; ``obj`` may be a dict or a JSON string."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, Mapping):
            raise ConfigurationError("polynomial must be a JSON object")
        terms = {}
        for key, c in obj.items():
            try:
                exps = tuple(int(tok) for tok in str(key).split())
            except ValueError as exc:
                raise ConfigurationError(f"bad exponent key {key!r}") from exc
            if len(exps) != arity:
                raise ConfigurationError(
                    f"exponent key {key!r} has {len(exps)} entries, expected {arity}"
                )
            if not isinstance(c, (int, float)) or isinstance(c, bool):
                raise ConfigurationError(f"coefficient for {key!r} is not a number")
            terms[exps] = terms.get(exps, 0.0) + float(c)
        return cls(terms, arity)

    def to_json(self) -> dict[str, float]:
        return {" ".join(str(e) for e in k): v for k, v in self.terms.items()}

    # structure --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparsePoly)
            and other.arity == self.arity
            and other.terms == self.terms
        )

    def __hash__(self) -> int:
        return hash((self.arity, tuple(self.terms.items())))

    def __repr__(self) -> str:
        return f"SparsePoly({self.to_json()}, arity={self.arity})"

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    @property
    def min_degree(self) -> int:
        return min((sum(k) for k in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(k) for k in self.terms}) <= 1

    def coeff(self, exps: Sequence[int]) -> float:
        return self.terms.get(tuple(exps), 0.0)

    def derivative(self, i: int) -> "SparsePoly":
        """Exact partial derivative with respect to variable ``i`` (0-based)."""
        d = self._derivs.get(i)
        if d is None:
            terms = {}
            for exps, c in self.terms.items():
                e = exps[i]
                if e:
                    new = list(exps)
                    new[i] = e - 1
                    terms[tuple(new)] = c * e
            d = SparsePoly(terms, self.arity)
            self._derivs[i] = d
        return d

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        if other.arity != self.arity:
            raise ConfigurationError("arity mismatch in polynomial sum")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return SparsePoly(terms, self.arity)

    def scale(self, c: float) -> "SparsePoly":
        return SparsePoly({k: c * v for k, v in self.terms.items()}, self.arity)

    def __call__(self, x):
        return poly_eval(self, x)


def _base_eval(p: SparsePoly, xs):
    arrays = [np.asarray(x, dtype=np.float64) for x in xs]
    shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
    if not p.terms:
        return np.zeros(shape) if shape else 0.0
    pts = np.stack([np.broadcast_to(a, shape).reshape(-1) for a in arrays]) if arrays else np.zeros((0, 1))
    out = poly_eval_batch(pts, p._exps, p._coeffs)
    return out.reshape(shape) if shape else float(out[0])


def poly_eval(p: SparsePoly, point: Sequence):
    """Evaluate ``p`` at ``point`` with exact derivative propagation.

    For jet inputs the value is ``p(values)`` and each partial is
    ``sum_i (dp/dx_i)(values) * dx_i``, with ``dp/dx_i`` taken symbolically; the
    recursion bottoms out in the batched kernel.
    """
    if len(point) != p.arity:
        raise ConfigurationError(
            f"polynomial of arity {p.arity} evaluated at {len(point)} coordinates"
        )
    top = max((level(x) for x in point), default=0)
    if top == 0:
        return _base_eval(p, point)
    vals = [x.value if level(x) == top else x for x in point]
    value = poly_eval(p, vals)
    m = None
    partials = None
    for i, x in enumerate(point):
        if level(x) != top:
            continue
        if m is None:
            m = x.m
            partials = [0.0] * m
        elif x.m != m:
            raise ConfigurationError("non-uniform seed counts in polynomial evaluation")
        dp = p.derivative(i)
        if not dp.terms:
            continue
        g = poly_eval(dp, vals)
        for s, dx in enumerate(x.partials):
            if isinstance(dx, float) and dx == 0.0:
                continue
            partials[s] = partials[s] + g * dx
    return Jet(value, partials)


def poly_partial_at_zero(p: SparsePoly, multi_index: Sequence[int]) -> float:
    """Mixed partial derivative of ``p`` at the origin: coefficient times prod(n_i!)."""
    idx = tuple(int(k) for k in multi_index)
    if len(idx) != p.arity:
        raise ConfigurationError(
            f"multi-index {idx} does not match polynomial arity {p.arity}"
        )
    return p.coeff(idx) * math.prod(math.factorial(k) for k in idx)
