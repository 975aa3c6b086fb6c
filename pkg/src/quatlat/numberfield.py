"""Exact arithmetic in a real quadratic field L = Q(sqrt(D)).

Elements are stored as p + q*sqrt(D) with exact rational p, q.  The two real
embeddings send sqrt(D) to +sqrt(D) and -sqrt(D); embedding is the only lossy
operation (rounds to binary64).  The ring of integers uses the basis
{1, sqrt(D)} for D != 1 (mod 4) and {1, (1+sqrt(D))/2} for D == 1 (mod 4).
Congruence ideals are restricted to (q) = q*O_L with q a positive rational
integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational


def _is_square_free(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class QuadraticField:
    """The real quadratic field Q(sqrt(D)) for square-free D >= 2."""

    D: int

    def __post_init__(self):
        if not isinstance(self.D, int) or not _is_square_free(self.D):
            raise ValueError(f"D must be a square-free integer >= 2, got {self.D!r}")

    @property
    def sqrtD(self) -> float:
        return math.sqrt(self.D)

    @property
    def basis_is_half_integral(self) -> bool:
        """True when the integral basis is {1, (1+sqrt(D))/2}."""
        return self.D % 4 == 1

    def element(self, p, q=0) -> "FieldElement":
        return FieldElement(self, Fraction(p), Fraction(q))

    def zero(self) -> "FieldElement":
        return self.element(0)

    def one(self) -> "FieldElement":
        return self.element(1)

    def sqrt_gen(self) -> "FieldElement":
        """The element sqrt(D)."""
        return self.element(0, 1)

    def from_integral_coords(self, u, v) -> "FieldElement":
        """Element u + v*omega in the integral basis."""
        if self.basis_is_half_integral:
            return self.element(Fraction(2 * u + v, 2), Fraction(v, 2))
        return self.element(u, v)

    def __repr__(self):
        return f"QuadraticField(D={self.D})"


@dataclass(frozen=True)
class FieldElement:
    """p + q*sqrt(D) with exact rational coordinates."""

    field: QuadraticField
    p: Fraction
    q: Fraction

    def _check(self, other) -> "FieldElement":
        if isinstance(other, Rational):
            return FieldElement(self.field, Fraction(other), Fraction(0))
        if not isinstance(other, FieldElement) or other.field != self.field:
            raise ValueError("operands lie in different fields")
        return other

    def __add__(self, other):
        o = self._check(other)
        return FieldElement(self.field, self.p + o.p, self.q + o.q)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, -self.p, -self.q)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) + (-self)

    def __mul__(self, other):
        o = self._check(other)
        D = self.field.D
        return FieldElement(
            self.field,
            self.p * o.p + D * self.q * o.q,
            self.p * o.q + self.q * o.p,
        )

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("element is zero")
        return FieldElement(self.field, self.p / n, -self.q / n)

    def __truediv__(self, other):
        return self * self._check(other).inverse()

    def conjugate(self) -> "FieldElement":
        """Galois conjugate p - q*sqrt(D)."""
        return FieldElement(self.field, self.p, -self.q)

    def norm(self) -> Fraction:
        return self.p * self.p - self.field.D * self.q * self.q

    def trace(self) -> Fraction:
        return 2 * self.p

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    @property
    def integral_coords(self):
        """Coordinates (u, v) in the integral basis, as exact rationals."""
        if self.field.basis_is_half_integral:
            v = 2 * self.q
            u = self.p - self.q
        else:
            u, v = self.p, self.q
        return u, v

    def is_integral(self) -> bool:
        u, v = self.integral_coords
        return u.denominator == 1 and v.denominator == 1

    def embed(self, j: int) -> float:
        """Real embedding: j=1 sends sqrt(D) to +sqrt(D), j=2 to -sqrt(D)."""
        if j not in (1, 2):
            raise ValueError("embedding index must be 1 or 2")
        sign = 1.0 if j == 1 else -1.0
        return float(self.p) + float(self.q) * sign * self.field.sqrtD

    def __repr__(self):
        return f"({self.p} + {self.q}*sqrt{self.field.D})"


@dataclass(frozen=True)
class Level:
    """Principal congruence level; the ideal is q*O_L.  q = 1 is the full lattice."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 1:
            raise ValueError(f"level must be an integer >= 1, got {self.q!r}")


def embed(x: FieldElement, j: int) -> float:
    """iota_j(x) rounded to binary64."""
    return x.embed(j)


def field_norm_trace(x: FieldElement):
    """(norm, trace) = (iota_1(x)*iota_2(x), iota_1(x)+iota_2(x)), exact."""
    return x.norm(), x.trace()


def congruent_to_zero(x: FieldElement, level: Level) -> bool:
    """True iff both integral-basis coordinates of x are divisible by level.q.

    Rejects non-integral x.
    """
    if not x.is_integral():
        raise ValueError(f"{x!r} is not integral")
    u, v = x.integral_coords
    q = level.q
    return int(u) % q == 0 and int(v) % q == 0
