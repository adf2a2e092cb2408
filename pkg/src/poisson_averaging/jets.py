"""Forward-mode multi-seed dual numbers.

A :class:`Jet` carries a value and one partial derivative per seed direction.
Values may be floats, numpy arrays (the arithmetic broadcasts, so a whole batch
of quadrature nodes is evaluated at once) or other jets.  Nesting a jet inside
a jet gives mixed second derivatives, which the reduction needs for the
Jacobian of ``DPhi(x) . F(x)`` with respect to the cylindrical coordinates.

Each jet has a ``level``: 0 for plain numbers, ``1 + level(value)`` for jets.
In a binary operation the operand with the lower level is treated as a
constant, so inner and outer jets combine correctly.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Jet",
    "level",
    "primal",
    "value_of",
    "seed",
    "lift",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "ScalarField",
    "VectorField",
    "jet_eval",
]


def level(x) -> int:
    return x.level if isinstance(x, Jet) else 0


def value_of(x):
    """One level down: the value of a jet, or ``x`` itself."""
    return x.value if isinstance(x, Jet) else x


def primal(x):
    """Strip all jet levels and return the underlying number or array."""
    while isinstance(x, Jet):
        x = x.value
    return x


class Jet:
    __slots__ = ("value", "partials", "level")
    # Make numpy defer to our reflected operators instead of building object arrays.
    __array_ufunc__ = None

    def __init__(self, value, partials: Sequence = ()):
        self.value = value
        self.partials = tuple(partials)
        self.level = level(value) + 1

    @property
    def m(self) -> int:
        return len(self.partials)

    def __repr__(self) -> str:
        return f"Jet({self.value!r}, {list(self.partials)!r})"

    def _coerce(self, other):
        """Return (other_value, other_partials) or None when other outranks self."""
        if isinstance(other, Jet):
            if other.level == self.level:
                if other.m != self.m:
                    raise ConfigurationError(
                        f"seed count mismatch: {self.m} vs {other.m}"
                    )
                return other.value, other.partials
            if other.level > self.level:
                return None
        return other, None

    def __add__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        ov, op = c
        if op is None:
            return Jet(self.value + ov, self.partials)
        return Jet(self.value + ov, [a + b for a, b in zip(self.partials, op)])

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        ov, op = c
        if op is None:
            return Jet(self.value - ov, self.partials)
        return Jet(self.value - ov, [a - b for a, b in zip(self.partials, op)])

    def __rsub__(self, other):
        return Jet(other - self.value, [-a for a in self.partials])

    def __neg__(self):
        return Jet(-self.value, [-a for a in self.partials])

    def __pos__(self):
        return self

    def __mul__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        ov, op = c
        if op is None:
            return Jet(self.value * ov, [a * ov for a in self.partials])
        sv = self.value
        return Jet(sv * ov, [a * ov + sv * b for a, b in zip(self.partials, op)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        ov, op = c
        if op is None:
            inv = 1.0 / ov
            return Jet(self.value * inv, [a * inv for a in self.partials])
        q = self.value / ov
        return Jet(q, [(a - q * b) / ov for a, b in zip(self.partials, op)])

    def __rtruediv__(self, other):
        q = other / self.value
        return Jet(q, [-(q * a) / self.value for a in self.partials])

    def __pow__(self, power):
        if isinstance(power, Jet):
            return exp(power * log(self))
        if isinstance(power, (int, np.integer)):
            n = int(power)
            if n == 0:
                return Jet(self.value * 0.0 + 1.0, [a * 0.0 for a in self.partials])
            if n == 1:
                return self
            if n < 0:
                return 1.0 / (self ** (-n))
            vn1 = self.value ** (n - 1)
            d = n * vn1
            return Jet(vn1 * self.value, [a * d for a in self.partials])
        vp = self.value ** (power - 1)
        d = power * vp
        return Jet(vp * self.value, [a * d for a in self.partials])

    def __rpow__(self, base):
        return exp(self * np.log(base))


def seed(values: Sequence, m: int | None = None, offset: int = 0) -> list[Jet]:
    """Seed ``values`` as independent directions ``offset, offset+1, ...`` among ``m``."""
    m = len(values) + offset if m is None else m
    out = []
    for i, v in enumerate(values):
        p = [0.0] * m
        p[offset + i] = 1.0
        out.append(Jet(v, p))
    return out


def lift(x, like: Jet):
    """Embed ``x`` at the level of ``like`` with zero partials."""
    if level(x) >= like.level:
        return x
    return Jet(x, [0.0] * like.m)


def _unary(f, df):
    def op(x):
        if isinstance(x, Jet):
            v = op(x.value)
            d = df(x.value, v)
            return Jet(v, [a * d for a in x.partials])
        return f(x)

    return op


sqrt = _unary(np.sqrt, lambda x, v: 0.5 / v)
exp = _unary(np.exp, lambda x, v: v)
log = _unary(np.log, lambda x, v: 1.0 / x)
sin = _unary(np.sin, lambda x, v: cos(x))
cos = _unary(np.cos, lambda x, v: -sin(x))


class ScalarField:
    """A callable ``f(x) -> scalar`` with a declared arity.

    The evaluator receives a list of coordinates (numbers, arrays or jets) and
    must only use jet-aware arithmetic (``+ - * / **`` and the functions in
    this module).
    """

    def __init__(self, fn: Callable, arity: int, name: str = ""):
        self.fn = fn
        self.arity = int(arity)
        self.name = name or getattr(fn, "__name__", "field")

    def __call__(self, x):
        if len(x) != self.arity:
            raise ConfigurationError(
                f"{self.name}: expected {self.arity} coordinates, got {len(x)}"
            )
        return self.fn(list(x))

    @classmethod
    def constant(cls, c: float, arity: int) -> "ScalarField":
        return cls(lambda x: c, arity, name=f"const({c})")


class VectorField:
    """A callable ``F(x) -> list`` with declared arity and output dimension."""

    def __init__(self, fn: Callable, arity: int, dim: int, name: str = ""):
        self.fn = fn
        self.arity = int(arity)
        self.dim = int(dim)
        self.name = name or getattr(fn, "__name__", "field")

    def __call__(self, x):
        if len(x) != self.arity:
            raise ConfigurationError(
                f"{self.name}: expected {self.arity} coordinates, got {len(x)}"
            )
        out = list(self.fn(list(x)))
        if len(out) != self.dim:
            raise ConfigurationError(
                f"{self.name}: returned {len(out)} components, expected {self.dim}"
            )
        return out

    @classmethod
    def zero(cls, arity: int, dim: int) -> "VectorField":
        return cls(lambda x: [0.0] * dim, arity, dim, name="zero")


def jet_eval(field, point: Sequence):
    """Evaluate ``field`` at a point of jets, checking arity and seed counts.

    Returns a :class:`Jet` even when the field is constant in the point.
    """
    arity = getattr(field, "arity", None)
    if arity is not None and len(point) != arity:
        raise ConfigurationError(f"arity mismatch: field takes {arity}, got {len(point)}")
    counts = {p.m for p in point if isinstance(p, Jet)}
    if len(counts) > 1:
        raise ConfigurationError(f"non-uniform seed counts {sorted(counts)}")
    out = field(point)
    if not isinstance(out, Jet) and counts:
        out = Jet(out, [0.0] * counts.pop())
    return out
