"""Quaternion algebra A = (a,b / L) over a real quadratic field, its standard
order with integral coefficients, reduced norm, congruence conditions, and the
real 2x2 matrix embeddings at split places.

Generators satisfy I^2 = a, J^2 = b, K = IJ = -JI.  The reduced norm is
n(x + yI + wJ + zK) = x^2 - a y^2 - b w^2 + ab z^2, which is multiplicative.
A real place j is split (A tensor R = Mat_2(R)) iff iota_j(a) > 0 or
iota_j(b) > 0; at a non-split place the norm form is positive definite, so the
algebra is automatically a division algebra.  When all places are split,
division is checked by an exact isotropy search up to a coefficient height.

The matrix embedding uses iota_j(I) = diag(sqrt(a_j), -sqrt(a_j)) and
iota_j(J) = [[0, b_j], [1, 0]], which requires iota_j(a) > 0; configurations
with iota_j(a) < 0 < iota_j(b) at a split place should be normalized by the
symbol swap (a, b) -> (b, a) before constructing the algebra.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .numberfield import FieldElement, Level, QuadraticField, congruent_to_zero


@dataclass(frozen=True)
class QuaternionAlgebra:
    field: QuadraticField
    a: FieldElement
    b: FieldElement

    def __post_init__(self):
        if self.a.field != self.field or self.b.field != self.field:
            raise ValueError("a, b must lie in the base field")
        if self.a.is_zero() or self.b.is_zero():
            raise ValueError("a, b must be nonzero")
        if not self.split_places:
            raise ConfigError("no split real place: the group has no PSL(2,R) factor")
        for j in self.split_places:
            if self.a.embed(j) <= 0:
                raise ConfigError(
                    f"embedding {j} is split but iota_{j}(a) <= 0; "
                    "swap the symbol to (b, a) so the matrix embedding is real")

    @property
    def split_places(self) -> tuple:
        """1-based indices j with iota_j(a) > 0 or iota_j(b) > 0."""
        return tuple(j for j in (1, 2)
                     if self.a.embed(j) > 0 or self.b.embed(j) > 0)

    @property
    def d(self) -> int:
        return len(self.split_places)

    def one(self) -> "Quaternion":
        f = self.field
        return Quaternion(self, f.one(), f.zero(), f.zero(), f.zero())

    def element(self, x, y, w, z) -> "Quaternion":
        f = self.field
        conv = lambda c: c if isinstance(c, FieldElement) else f.element(c)
        return Quaternion(self, conv(x), conv(y), conv(w), conv(z))

    def from_integral_coords(self, coords) -> "Quaternion":
        """Quaternion from 8 integral-basis integers (u_x, v_x, ..., v_z)."""
        f = self.field
        u = [f.from_integral_coords(coords[2 * i], coords[2 * i + 1]) for i in range(4)]
        return Quaternion(self, *u)

    def division_sanity(self, height: int = 10) -> None:
        """Exact search for an isotropic vector of the norm form.

        Enumerates values of x^2 - a y^2 and b (w^2 - a z^2) over all field
        elements with integral coordinates of absolute value <= height and
        raises ConfigError when they intersect nontrivially (a zero divisor
        witness).  At a non-split place the norm form is definite and the
        search is skipped.
        """
        if self.d < 2:
            return
        f = self.field
        rng = range(-height, height + 1)
        elems = [f.from_integral_coords(u, v) for u in rng for v in rng]
        squares = [e * e for e in elems]
        left = {}
        for x2, x in zip(squares, elems):
            for y2, y in zip(squares, elems):
                v = x2 - self.a * y2
                key = (v.p, v.q)
                if key not in left:
                    left[key] = (x, y)
        for w2, w in zip(squares, elems):
            for z2, z in zip(squares, elems):
                v = self.b * (w2 - self.a * z2)
                key = (v.p, v.q)
                if key in left:
                    x, y = left[key]
                    if not (x.is_zero() and y.is_zero() and w.is_zero() and z.is_zero()):
                        raise ConfigError(
                            "norm form is isotropic (not a division algebra): "
                            f"witness (x,y,w,z)=({x},{y},{w},{z})")

    def __repr__(self):
        return f"QuaternionAlgebra(D={self.field.D}, a={self.a}, b={self.b})"


@dataclass(frozen=True)
class Quaternion:
    """x + yI + wJ + zK with coefficients in L."""

    algebra: QuaternionAlgebra
    x: FieldElement
    y: FieldElement
    w: FieldElement
    z: FieldElement

    def _check(self, other) -> "Quaternion":
        if not isinstance(other, Quaternion) or other.algebra != self.algebra:
            raise ValueError("operands lie in different algebras")
        return other

    def __mul__(self, other):
        o = self._check(other)
        a, b = self.algebra.a, self.algebra.b
        x1, y1, w1, z1 = self.x, self.y, self.w, self.z
        x2, y2, w2, z2 = o.x, o.y, o.w, o.z
        return Quaternion(
            self.algebra,
            x1 * x2 + a * y1 * y2 + b * w1 * w2 - a * b * z1 * z2,
            x1 * y2 + y1 * x2 - b * w1 * z2 + b * z1 * w2,
            x1 * w2 + w1 * x2 + a * y1 * z2 - a * z1 * y2,
            x1 * z2 + z1 * x2 + y1 * w2 - w1 * y2,
        )

    def __add__(self, other):
        o = self._check(other)
        return Quaternion(self.algebra, self.x + o.x, self.y + o.y,
                          self.w + o.w, self.z + o.z)

    def __sub__(self, other):
        o = self._check(other)
        return Quaternion(self.algebra, self.x - o.x, self.y - o.y,
                          self.w - o.w, self.z - o.z)

    def __neg__(self):
        return Quaternion(self.algebra, -self.x, -self.y, -self.w, -self.z)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.algebra, self.x, -self.y, -self.w, -self.z)

    def reduced_norm(self) -> FieldElement:
        a, b = self.algebra.a, self.algebra.b
        return (self.x * self.x - a * self.y * self.y
                - b * self.w * self.w + a * b * self.z * self.z)

    def reduced_trace(self) -> FieldElement:
        return self.x + self.x

    def is_integral(self) -> bool:
        return all(c.is_integral() for c in (self.x, self.y, self.w, self.z))

    def coefficients(self):
        return (self.x, self.y, self.w, self.z)

    def __repr__(self):
        return f"[{self.x} + {self.y} I + {self.w} J + {self.z} K]"


def qmul(alpha: Quaternion, beta: Quaternion) -> Quaternion:
    """Exact product in the algebra."""
    return alpha * beta


def reduced_norm(alpha: Quaternion) -> FieldElement:
    return alpha.reduced_norm()


def embed_matrix(alpha: Quaternion, j: int) -> np.ndarray:
    """2x2 real matrix iota_j(alpha) at a split place j (requires a_j > 0)."""
    alg = alpha.algebra
    if j not in alg.split_places:
        raise ValueError(f"place {j} is not split for {alg!r}")
    aj = alg.a.embed(j)
    bj = alg.b.embed(j)
    sq = math.sqrt(aj)
    x, y, w, z = (c.embed(j) for c in alpha.coefficients())
    return np.array([
        [x + y * sq, bj * (w + z * sq)],
        [w - z * sq, x - y * sq],
    ])


def is_congruent_identity(alpha: Quaternion, level: Level) -> bool:
    """True iff alpha is integral and alpha - 1 lies in the ideal (level.q)."""
    if not alpha.is_integral():
        raise ValueError("alpha must lie in the order (integral coefficients)")
    one = alpha.algebra.one()
    diff = alpha - one
    return all(congruent_to_zero(c, level) for c in diff.coefficients())


def random_order_element(alg: QuaternionAlgebra, rng, height: int = 10) -> Quaternion:
    """Random element of the order with integral coordinates up to height."""
    coords = [int(rng.integers(-height, height + 1)) for _ in range(8)]
    return alg.from_integral_coords(coords)
