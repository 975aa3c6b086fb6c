"""The five test-function families used on the geometric side, with their
spherical transforms.

All are built from a single fixed smooth radial bump f supported on B_1
(profile exp(1 - 1/(1-t^2))), whose transform is cached once on the real
axis as a Chebyshev interpolant:

* ``ex``  F = f_R * f_R-check with f_R a smooth plateau (1 on B_{R-1}, 0 off
  B_R): transform Sf_R(r) conj(Sf_R(conj r)), nonnegative on R and iR, of
  size e^{2R(1/2+x)} at r = ix.
* ``sp``  h_T(r) = h(r/T) with h = S(f*f-check); realized by the inverse
  transform, supported on B_{2/T}, bounded by O(T^2).
* ``s``   h_t(r) = (h(r+t) + h(r-t))/2; realized on B_2, |F(1)| of order t.
* ``phi`` the normalized lowest-weight-m matrix-coefficient kernel
  (2|m|-1)/(4pi) cosh(t/2)^{-2|m|}; transform equal to 1 at
  r = +-i(|m|-1/2) and 0 elsewhere (|m| >= 2).
* ``dis`` the smoothed K-type window (T/4pi) sum_m rho(m/T) Phi_m, a finite
  sum over m in [3T/4, 9T/4]; transform T rho(m/T)/(2|m|-1) at
  r = +-i(m-1/2).  rho is a fixed smooth cutoff, 1 on [1,2], supported on
  [3/4, 9/4] so that dyadic windows [T, 2T] land in the plateau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .spherical import (RadialFunction, SpectralFunction, inverse_transform_profile,
                        phi_profile_matrix, spherical_transform,
                        spherical_transform_grid)
from .util import gauss_legendre_panel, plateau_profile, smoothstep, std_bump, TWO_PI

_SF_RMAX = 64.0
_DISCRETE_MATCH_TOL = 1e-9


# ---------------------------------------------------------------------------
# the fixed base bump and its cached transform
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def base_bump() -> RadialFunction:
    """The fixed nonnegative weight-0 bump supported on B_1."""
    return RadialFunction(0, std_bump, 1.0)


@lru_cache(maxsize=1)
def _sf_base_cheb():
    """Chebyshev interpolant of S_0 f on the real interval [0, _SF_RMAX]."""
    f = base_bump()
    n = 1024
    xs = np.cos(np.pi * np.arange(n + 1) / n)
    rs = (xs + 1.0) * (_SF_RMAX / 2.0)
    vals = spherical_transform_grid(f, rs).real
    coef = _cheb.chebfit(xs, vals, n)
    return coef


def sf_base_real(rs) -> np.ndarray:
    """S_0 f on the real axis (vectorized, even)."""
    rs = np.abs(np.asarray(rs, dtype=float))
    if (rs > _SF_RMAX).any():
        out = np.zeros(rs.shape)
        inside = rs <= _SF_RMAX
        out[inside] = sf_base_real(rs[inside])
        return out
    return _cheb.chebval(rs * (2.0 / _SF_RMAX) - 1.0, _sf_base_cheb())


@lru_cache(maxsize=4096)
def _sf_base_scalar(rr: complex) -> complex:
    return spherical_transform(base_bump(), rr)


def sf_base(r) -> complex:
    """S_0 f at a single (possibly complex) spectral point."""
    r = complex(r)
    if r.imag == 0.0:
        return complex(sf_base_real(np.array([r.real]))[0])
    return _sf_base_scalar(r)


def h_base(r) -> complex:
    """h(r) = S(f * f-check)(r) = S f(r) conj(S f(conj r))."""
    r = complex(r)
    return sf_base(r) * np.conj(sf_base(r.conjugate()))


def h_base_real(rs) -> np.ndarray:
    return sf_base_real(rs) ** 2


# ---------------------------------------------------------------------------
# the smooth K-type cutoff
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffRho:
    """Smooth cutoff: 0 <= rho <= 1, rho = 1 on [plateau_lo, plateau_hi],
    rho = 0 outside (support_lo, support_hi)."""

    plateau_lo: float = 1.0
    plateau_hi: float = 2.0
    support_lo: float = 0.75
    support_hi: float = 2.25

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        up = smoothstep((x - self.support_lo) / (self.plateau_lo - self.support_lo))
        down = smoothstep((self.support_hi - x) / (self.support_hi - self.plateau_hi))
        return up * down

    def hat(self, z: complex, nodes: Optional[int] = None) -> complex:
        """Fourier transform int rho(x) e^{2 pi i x z} dx (z complex)."""
        z = complex(z)
        if nodes is None:
            nodes = 96 + 8 * int(abs(z))
        xs, ws = gauss_legendre_panel(self.support_lo, self.support_hi, min(nodes, 4096))
        return complex(np.sum(ws * self(xs) * np.exp(2j * np.pi * xs * z)))


# ---------------------------------------------------------------------------
# realized multi-K-type sums (the `dis` family)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KSumFunction:
    """Finite sum of weight-m kernels: sum_m coef_m chi_m(kk') cosh(t/2)^{-2|m|}."""

    ms: tuple
    coefs: tuple
    support_radius: float = math.inf
    weight = None

    def eval_kak(self, angle_sum, t):
        angle_sum = np.asarray(angle_sum, dtype=float)
        t = np.asarray(t, dtype=float)
        lc = np.log(np.cosh(t / 2.0))
        ms = np.asarray(self.ms, dtype=float)
        cs = np.asarray(self.coefs, dtype=float)
        # sum_m c_m exp(i m sigma - 2|m| log cosh(t/2))
        ex = np.exp(1j * np.multiply.outer(angle_sum, ms)
                    - 2.0 * np.multiply.outer(lc, np.abs(ms)))
        return ex @ cs

    def __call__(self, t):
        return self.eval_kak(np.zeros_like(np.asarray(t, dtype=float)), t)

    def at_identity(self):
        return complex(np.sum(self.coefs))


# ---------------------------------------------------------------------------
# the TestFunction container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A constructed test function: realized kernel plus spectral transform."""

    kind: str                    # 'ex' | 'sp' | 's' | 'phi' | 'dis'
    params: tuple                # (R,) | (T,) | (t,) | (m,) | (T,)
    realized: object             # RadialFunction or KSumFunction
    transform: SpectralFunction
    base_bump: Optional[RadialFunction] = None
    rho: Optional[CutoffRho] = None
    raw_eval: Optional[Callable] = None   # profile values without support clipping

    def at_identity(self) -> complex:
        return self.realized.at_identity()


# ---------------------------------------------------------------------------
# family constructors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def make_ex(R: float) -> TestFunction:
    """Plateau pair-correlation function: F = f_R * f_R-check on B_{2R}.

    f_R is 1 on B_{R-1}, smooth, supported on B_R; the transform is large
    (of size e^{2R(1/2+x)}) on the non-tempered segment r = ix.
    """
    if R < 1:
        raise ValueError("R >= 1 required")
    from .spherical import convolve
    fR = RadialFunction(0, lambda t: plateau_profile(t, R - 1.0, R), R)
    realized = convolve(fR, fR.reflected())

    @lru_cache(maxsize=4096)
    def _sfR(rr: complex) -> complex:
        return spherical_transform(fR, rr)

    def h(r):
        r = complex(r)
        return _sfR(r) * np.conj(_sfR(r.conjugate()))

    return TestFunction(kind="ex", params=(R,), realized=realized,
                        transform=SpectralFunction(h, 2.0 * R), base_bump=fR)


def _inverse_realize(h_vec, support: float, margin: float = 2.0,
                     r_panel: float = None):
    """Chebyshev profile of the weight-0 inverse transform of h on
    [0, margin*support], plus a raw evaluator for support diagnostics."""
    L = margin * support
    n = 96
    xs = np.cos(np.pi * np.arange(n + 1) / n)
    ts = (xs + 1.0) * (L / 2.0)
    vals, tail = inverse_transform_profile(h_vec, ts, vectorized=True,
                                           r_panel=r_panel)
    coef = _cheb.chebfit(xs, vals, n)
    prof = lambda t: _cheb.chebval(np.asarray(t, dtype=float) * (2.0 / L) - 1.0, coef)
    raw = lambda ts_: inverse_transform_profile(h_vec, np.asarray(ts_, dtype=float),
                                                vectorized=True, r_panel=r_panel)[0]
    return prof, raw, tail


@lru_cache(maxsize=32)
def make_sp(T: float) -> TestFunction:
    """Spectral-window function: h_T(r) = h(r/T), realized on B_{2/T}."""
    if T < 1:
        raise ValueError("T >= 1 required")

    def h_vec(rs):
        return h_base_real(np.asarray(rs, dtype=float) / T)

    def h(r):
        return h_base(complex(r) / T)

    prof, raw, _tail = _inverse_realize(h_vec, 2.0 / T, r_panel=max(2.5, 0.4 * T))
    realized = RadialFunction(0, prof, 2.0 / T)
    return TestFunction(kind="sp", params=(T,), realized=realized,
                        transform=SpectralFunction(h, 2.0 / T),
                        base_bump=base_bump(), raw_eval=raw)


@lru_cache(maxsize=32)
def make_s(t_shift: float) -> TestFunction:
    """Shifted-window function: h_t(r) = (h(r+t) + h(r-t))/2, realized on B_2."""
    if t_shift < 1:
        raise ValueError("t >= 1 required")

    def h_vec(rs):
        rs = np.asarray(rs, dtype=float)
        return 0.5 * (h_base_real(rs + t_shift) + h_base_real(rs - t_shift))

    def h(r):
        r = complex(r)
        return 0.5 * (h_base(r + t_shift) + h_base(r - t_shift))

    prof, raw, _tail = _inverse_realize(h_vec, 2.0, r_panel=1.5)
    realized = RadialFunction(0, prof, 2.0)
    return TestFunction(kind="s", params=(t_shift,), realized=realized,
                        transform=SpectralFunction(h, 2.0),
                        base_bump=base_bump(), raw_eval=raw)


def _discrete_descriptor(points: dict):
    """Transform supported on finitely many spectral points r = +-i(m-1/2).

    points maps m -> value; elsewhere the transform vanishes.
    """
    def h(r):
        r = complex(r)
        if abs(r.real) > _DISCRETE_MATCH_TOL:
            return 0.0
        for m, v in points.items():
            if abs(abs(r.imag) - (abs(m) - 0.5)) < _DISCRETE_MATCH_TOL:
                return v
        return 0.0
    return h


@lru_cache(maxsize=64)
def make_phi(m: int) -> TestFunction:
    """Normalized weight-m kernel (2|m|-1)/(4pi) cosh(t/2)^{-2|m|}, |m| >= 2.

    Its transform is 1 at r = +-i(|m|-1/2) and 0 at every other spectral
    point; for |m| <= 1 the defining integral is not absolutely convergent.
    """
    ma = abs(int(m))
    if ma < 2:
        raise ValueError("|m| >= 2 required (transform diverges otherwise)")
    norm = (2.0 * ma - 1.0) / (4.0 * math.pi)
    prof = lambda t: norm * np.cosh(np.asarray(t, dtype=float) / 2.0) ** (-2 * ma)
    realized = RadialFunction(int(m), prof, math.inf)
    h = _discrete_descriptor({ma: 1.0})
    return TestFunction(kind="phi", params=(int(m),), realized=realized,
                        transform=SpectralFunction(h, 0.0))


@lru_cache(maxsize=32)
def make_dis(T: float, conj: bool = False, rho: Optional[CutoffRho] = None) -> TestFunction:
    """K-type window: (T/4pi) sum_m rho(m/T) Phi_m, m in [3T/4, 9T/4].

    With conj=True the conjugate (negative-m) window is built.
    """
    if T < 2:
        raise ValueError("T >= 2 required")
    rho = rho or CutoffRho()
    m_lo = int(math.ceil(rho.support_lo * T))
    m_hi = int(math.floor(rho.support_hi * T))
    ms, coefs, points = [], [], {}
    for m in range(m_lo, m_hi + 1):
        w = float(rho(m / T))
        if w <= 0.0:
            continue
        mm = -m if conj else m
        ms.append(mm)
        coefs.append(T / (4.0 * math.pi) * w)
        points[mm] = T * w / (2.0 * m - 1.0)
    realized = KSumFunction(tuple(ms), tuple(coefs))
    h = _discrete_descriptor(points)
    return TestFunction(kind="dis", params=(T,), realized=realized,
                        transform=SpectralFunction(h, 0.0), rho=rho)


# ---------------------------------------------------------------------------
# angular decay of the K-type window
# ---------------------------------------------------------------------------

def dis_sup_bound(T: float, t) -> np.ndarray:
    """The coarse bound T^2 / cosh(t/2)^T for |F^dis_T| at radius t."""
    return T * T / np.cosh(np.asarray(t, dtype=float) / 2.0) ** T


def dis_value_direct(T: float, eta: float, t: float,
                     rho: Optional[CutoffRho] = None) -> complex:
    """Direct K-type sum of the window at angle-sum 2*pi*eta and radius t."""
    F = make_dis(T, rho=rho)
    return complex(F.realized.eval_kak(np.array(TWO_PI * eta), np.asarray(t, dtype=float)))


def dis_value_poisson(T: float, eta: float, t: float, n_terms: int = 40,
                      rho: Optional[CutoffRho] = None) -> complex:
    """The dual-sum form (T^2/4pi) sum_n rho_hat(T(n + eta + i log cosh(t/2)/pi)).

    Equal to dis_value_direct by Poisson summation of the K-type sum.
    """
    rho = rho or CutoffRho()
    y = math.log(math.cosh(t / 2.0)) / math.pi
    z0 = eta + 1j * y
    total = 0.0 + 0.0j
    for n in range(-n_terms, n_terms + 1):
        total += rho.hat(T * (n + z0))
    return T * T / (4.0 * math.pi) * total


def dis_angular_decay(T: float, alpha: float, beta: float, t: float,
                      n_terms: int = 40, rho: Optional[CutoffRho] = None):
    """(value, bound, eta): the direct window value at k_alpha a_t k_beta,
    the triangle-inequality bound from the dual (Poisson) sum, and the folded
    angle parameter eta = (alpha+beta)/2pi in [-1/2, 1/2)."""
    rho = rho or CutoffRho()
    eta = (alpha + beta) / TWO_PI
    eta = eta - math.floor(eta + 0.5)
    value = dis_value_direct(T, eta, t, rho=rho)
    y = math.log(math.cosh(t / 2.0)) / math.pi
    bound = 0.0
    for n in range(-n_terms, n_terms + 1):
        bound += abs(rho.hat(T * (n + eta + 1j * y)))
    bound *= T * T / (4.0 * math.pi)
    return value, bound, eta
