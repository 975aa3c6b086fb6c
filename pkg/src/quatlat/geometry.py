"""PSL(2,R) coordinates, norms, hyperbolic distance, Cartan (KAK)
decomposition, and polar Haar measure.

Conventions
-----------
a_t = diag(e^{t/2}, e^{-t/2});  k_theta = [[cos(t/2), sin(t/2)],
[-sin(t/2), cos(t/2)]] with theta the rotation angle of the Moebius action on
the tangent space at i.  ||g||^2 = tr(g^T g) = 2 cosh H(g) where H(g) is the
hyperbolic distance d(g i, i).  In KAK coordinates g = k_alpha a_t k_beta the
Haar measure is dg = 2 pi sinh(t) dt dk dk' with dk = dtheta / (2 pi)
(mass one on K), so vol(B_c) = 2 pi (cosh c - 1).

Cartan coordinates are extracted with the rotation form of the 2x2 singular
value decomposition: writing E = (A+D)/2, F = (A-D)/2, G = (C+B)/2,
H = (C-B)/2 for g = [[A,B],[C,D]], the angle sums/differences come from
atan2(H,E) and atan2(G,F) and cosh(t/2) = hypot(E,H); this is exact up to
roundoff for all t, with no cancellation in the angle sums.

Conjugation identities: for M(theta, t) = a_{-t} k_theta a_t = k_alpha a_H
k_beta one has

    cosh H = 1 + sin^2(theta/2) (cosh(2t) - 1),
    alpha + beta = theta + 2 Arg(1 + sinh^2(t/2) (1 - e^{-i theta})),

both verified against direct matrix decomposition (at theta = pi the first
gives H = 2t, as the matrix [[0, e^{-t}], [-e^t, 0]] shows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .util import TWO_PI, fold_angle

_SIGN_TOL = 1e-12
_DET_TOL = 1e-10


def rot(theta):
    """Matrix of k_theta."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, s], [-s, c]])


def diag_flow(t):
    """Matrix of a_t."""
    e = np.exp(t / 2.0)
    return np.array([[e, 0.0], [0.0, 1.0 / e]])


def canonical_matrix(m) -> np.ndarray:
    """Normalize to det 1 and fix the PSL sign.

    The representative has its first entry of magnitude > 1e-12 * max|entry|
    (in row-major order) positive.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det <= 0:
        raise ValueError(f"matrix must have positive determinant, got det={det}")
    m = m / math.sqrt(det)
    flat = m.ravel()
    scale = np.abs(flat).max()
    for v in flat:
        if abs(v) > _SIGN_TOL * scale:
            if v < 0:
                m = -m
            break
    return m


@dataclass(frozen=True)
class GroupElement:
    """An element of PSL(2,R): 2x2 real matrix, det 1, canonical sign."""

    m: np.ndarray

    def __init__(self, m):
        object.__setattr__(self, "m", canonical_matrix(m))

    @staticmethod
    def identity() -> "GroupElement":
        return GroupElement(np.eye(2))

    @staticmethod
    def rotation(theta) -> "GroupElement":
        return GroupElement(rot(theta))

    @staticmethod
    def flow(t) -> "GroupElement":
        return GroupElement(diag_flow(t))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.m @ other.m)

    def inv(self) -> "GroupElement":
        a, b, c, d = self.m[0, 0], self.m[0, 1], self.m[1, 0], self.m[1, 1]
        return GroupElement(np.array([[d, -b], [-c, a]]))

    def trace_abs(self) -> float:
        """|tr|, well defined in PSL."""
        return abs(self.m[0, 0] + self.m[1, 1])

    def frob_norm_sq(self) -> float:
        return float(np.sum(self.m * self.m))

    def __repr__(self):
        return f"GroupElement({self.m.tolist()})"


@dataclass(frozen=True)
class KakCoords:
    alpha: float
    t: float
    beta: float

    @property
    def angle_sum(self) -> float:
        return self.alpha + self.beta

    def reconstruct(self) -> GroupElement:
        return GroupElement(rot(self.alpha) @ diag_flow(self.t) @ rot(self.beta))


@dataclass(frozen=True)
class Ball:
    """Norm ball B_c = {g : H(g) <= c} = {g : ||g||^2 <= 2 cosh c}."""

    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("radius must be nonnegative")

    def contains(self, g: GroupElement) -> bool:
        return g.frob_norm_sq() <= 2.0 * math.cosh(self.c)

    def volume(self) -> float:
        return ball_volume(self.c)


def frob_norm_sq(g: GroupElement) -> float:
    """||g||^2 = tr(g^T g); equals 2 cosh H(g), with equality to 2 iff g in K."""
    return g.frob_norm_sq()


def hyp_distance(g: GroupElement) -> float:
    """H(g) = d(g i, i) = arccosh(||g||^2 / 2)."""
    return float(np.arccosh(max(g.frob_norm_sq() / 2.0, 1.0)))


def kak_batch(mats):
    """Cartan coordinates of a batch of det-1 matrices.

    Parameters
    ----------
    mats : (..., 2, 2) array

    Returns
    -------
    alpha, t, beta : arrays of shape (...)
        k_alpha a_t k_beta = +-mats entrywise; angles in [-pi, pi).
        For t below 1e-12 the rotation is folded into alpha (beta = 0).
    """
    mats = np.asarray(mats, dtype=float)
    A, B = mats[..., 0, 0], mats[..., 0, 1]
    C, D = mats[..., 1, 0], mats[..., 1, 1]
    E = 0.5 * (A + D)
    H = 0.5 * (C - B)
    F = 0.5 * (A - D)
    G = 0.5 * (C + B)
    cosh_half = np.hypot(E, H)          # (sigma1 + sigma2)/2
    sinh_half = np.hypot(F, G)          # (sigma1 - sigma2)/2
    t = 2.0 * np.log(cosh_half + sinh_half)
    t = np.maximum(t, 0.0)
    psum = np.arctan2(H, E)             # rotation angles p + q
    pdif = np.arctan2(G, F)
    degen = sinh_half < 1e-12 * cosh_half
    pdif = np.where(degen, -psum, pdif)  # convention: beta = 0 at t ~ 0
    p = 0.5 * (psum + pdif)
    q = 0.5 * (psum - pdif)
    return fold_angle(-2.0 * p), t, fold_angle(-2.0 * q)


def kak_decompose(g: GroupElement) -> KakCoords:
    """Cartan coordinates of a single element; t = H(g)."""
    a, t, b = kak_batch(g.m)
    return KakCoords(float(a), float(t), float(b))


def pk_coords(z: complex, theta: float) -> GroupElement:
    """g(z, theta) = p_z k_theta with p_z upper triangular, p_z i = z."""
    y = z.imag
    if y <= 0:
        raise ValueError("z must lie in the upper half plane")
    sy = math.sqrt(y)
    p = np.array([[sy, z.real / sy], [0.0, 1.0 / sy]])
    return GroupElement(p @ rot(theta))


def ball_volume(c: float) -> float:
    """Haar volume of B_c: 2 pi (cosh c - 1)."""
    if c < 0:
        raise ValueError("radius must be nonnegative")
    return TWO_PI * (math.cosh(c) - 1.0)


def lemma_kak_H(theta: float, t: float) -> float:
    """H(a_{-t} k_theta a_t) = arccosh(1 + sin^2(theta/2)(cosh(2t) - 1))."""
    return float(np.arccosh(1.0 + np.sin(theta / 2.0) ** 2 * (np.cosh(2.0 * t) - 1.0)))


def kak_conj_theta_aux(theta: float, t) -> np.ndarray:
    """The angle Arg(1 + sinh^2(t/2)(1 - e^{-i theta})).

    Vanishes at t = 0 and is monotone in t (increasing for theta > 0,
    decreasing for theta < 0), with limit Arg(1 - e^{-i theta}).
    """
    t = np.asarray(t, dtype=float)
    return np.angle(1.0 + np.sinh(t / 2.0) ** 2 * (1.0 - np.exp(-1j * theta)))


def lemma_kak_anglesum(theta: float, t: float):
    """alpha + beta for a_{-t} k_theta a_t = k_alpha a_H k_beta.

    Returns the representative theta + 2*Arg(1 + sinh^2(t/2)(1 - e^{-i theta}))
    in (-2 pi, 2 pi); it matches kak_decompose modulo 2 pi.
    """
    return theta + 2.0 * kak_conj_theta_aux(theta, t)


def anglesum_range_check(delta: float, theta: float, t: float) -> bool:
    """Whether |alpha + beta| for a_{-t} k_theta a_t lies in [delta, 2pi - delta].

    Requires delta <= |theta| and |theta +- pi| >= delta.
    """
    if not (0 < delta <= abs(theta)):
        raise ValueError("need 0 < delta <= |theta|")
    if abs(theta - math.pi) < delta or abs(theta + math.pi) < delta:
        raise ValueError("need |theta +- pi| >= delta")
    s = abs(float(lemma_kak_anglesum(theta, t)))
    return delta <= s <= TWO_PI - delta


def conjugate_orbit_batch(gamma_m, ts, phis):
    """Matrices a_{-t} k_{-phi} gamma k_phi a_t on the (t, phi) grid.

    Returns an array of shape (len(ts), len(phis), 2, 2).  Used by orbital
    quadratures; the right K factor of the polar decomposition drops out of
    every K-type integrand, so only (t, phi) matter.
    """
    ts = np.asarray(ts, dtype=float)
    phis = np.asarray(phis, dtype=float)
    c, s = np.cos(phis / 2.0), np.sin(phis / 2.0)
    # k_{-phi} gamma k_phi
    g = np.asarray(gamma_m, dtype=float)
    kmg = np.empty((len(phis), 2, 2))
    kmg[:, 0, 0] = c * g[0, 0] - s * g[1, 0]
    kmg[:, 0, 1] = c * g[0, 1] - s * g[1, 1]
    kmg[:, 1, 0] = s * g[0, 0] + c * g[1, 0]
    kmg[:, 1, 1] = s * g[0, 1] + c * g[1, 1]
    out = np.empty((len(phis), 2, 2))
    out[:, 0, 0] = kmg[:, 0, 0] * c + kmg[:, 0, 1] * (-s)
    out[:, 0, 1] = kmg[:, 0, 0] * s + kmg[:, 0, 1] * c
    out[:, 1, 0] = kmg[:, 1, 0] * c + kmg[:, 1, 1] * (-s)
    out[:, 1, 1] = kmg[:, 1, 0] * s + kmg[:, 1, 1] * c
    # conjugate by a_t: entries scale by e^{-t}, e^{t} off the diagonal
    et = np.exp(ts)[:, None]
    res = np.empty((len(ts), len(phis), 2, 2))
    res[..., 0, 0] = out[None, :, 0, 0]
    res[..., 1, 1] = out[None, :, 1, 1]
    res[..., 0, 1] = out[None, :, 0, 1] / et
    res[..., 1, 0] = out[None, :, 1, 0] * et
    return res


def sample_ball(c: float, n: int, rng) -> np.ndarray:
    """n Haar-uniform samples from B_c in KAK coordinates, as (n, 2, 2) matrices.

    Radial density proportional to sinh(t) on [0, c] (inverse CDF through
    cosh), both angles uniform.
    """
    u = rng.random(n)
    t = np.arccosh(1.0 + u * (math.cosh(c) - 1.0))
    th = rng.uniform(-math.pi, math.pi, n)
    ps = rng.uniform(-math.pi, math.pi, n)
    return compose_kak_batch(th, t, ps)


def compose_kak_batch(alpha, t, beta) -> np.ndarray:
    """Matrices k_alpha a_t k_beta for arrays of coordinates."""
    alpha = np.asarray(alpha, dtype=float)
    t = np.asarray(t, dtype=float)
    beta = np.asarray(beta, dtype=float)
    ca, sa = np.cos(alpha / 2), np.sin(alpha / 2)
    cb, sb = np.cos(beta / 2), np.sin(beta / 2)
    e = np.exp(t / 2)
    m = np.empty(np.broadcast(alpha, t, beta).shape + (2, 2))
    m[..., 0, 0] = ca * e * cb - sa / e * sb
    m[..., 0, 1] = ca * e * sb + sa / e * cb
    m[..., 1, 0] = -sa * e * cb - ca / e * sb
    m[..., 1, 1] = -sa * e * sb + ca / e * cb
    return m
