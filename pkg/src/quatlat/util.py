"""Small numeric helpers: smooth cutoffs, Chebyshev interpolation, quadrature
wrappers, angle folding, deterministic float formatting."""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.integrate import quad

TWO_PI = 2.0 * math.pi


def bump_exp(x):
    """exp(-1/x) for x > 0, exactly 0 for x <= 0 (C^inf at 0)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smoothstep(x):
    """C^inf monotone step: 0 for x <= 0, 1 for x >= 1."""
    a = bump_exp(np.asarray(x, dtype=float))
    b = bump_exp(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def plateau_profile(t, flat_end: float, support_end: float):
    """1 on [0, flat_end], smooth ramp down, 0 beyond support_end."""
    t = np.abs(np.asarray(t, dtype=float))
    if support_end <= flat_end:
        raise ValueError("support_end must exceed flat_end")
    return smoothstep((support_end - t) / (support_end - flat_end))


def std_bump(t):
    """exp(-1/(1-t^2)) inside |t|<1, 0 outside; normalized to 1 at t=0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def fold_angle(theta):
    """Representative of theta mod 2*pi in [-pi, pi)."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, TWO_PI) - np.pi


def angle_dist(a, b):
    """Distance between angles modulo 2*pi."""
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def quad_complex(f, a, b, **kw):
    """scipy.integrate.quad for a complex-valued integrand.

    Returns (value, error_estimate).
    """
    kw.setdefault("limit", 200)
    re, re_err = quad(lambda t: float(np.real(f(t))), a, b, **kw)
    im, im_err = quad(lambda t: float(np.imag(f(t))), a, b, **kw)
    return re + 1j * im, math.hypot(re_err, im_err)


class ChebProfile:
    """Chebyshev interpolant of a function on [0, L].

    Built by sampling at Chebyshev points with degree doubling until the
    coefficient tail drops below `tol` relative to the coefficient scale.
    Evaluation outside [0, L] returns 0.
    """

    def __init__(self, fn, L, tol=1e-10, n0=33, nmax=2049):
        self.L = float(L)
        n = n0
        coef = None
        while True:
            # chebinterpolate works on [-1, 1]
            coef = _cheb.chebinterpolate(lambda x: fn((x + 1.0) * (self.L / 2.0)), n)
            scale = np.abs(coef).max()
            tail = np.abs(coef[-max(4, n // 16):]).max()
            if scale == 0.0 or tail <= tol * scale or n >= nmax:
                break
            n *= 2
        self.coef = coef
        self.tail = 0.0 if np.abs(coef).max() == 0 else float(
            np.abs(coef[-max(4, len(coef) // 16):]).max() / np.abs(coef).max())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros(t.shape, dtype=self.coef.dtype)
        inside = (t >= 0) & (t <= self.L)
        if inside.any():
            x = t[inside] * (2.0 / self.L) - 1.0
            out[inside] = _cheb.chebval(x, self.coef)
        return out[0] if scalar else out


def fmt_g12(x) -> str:
    """Serialize a float with 12 significant digits (round-trip stable)."""
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return repr(x)
    return "%.12g" % float(x)


def round_g12(x) -> float:
    """Round a float to its 12-significant-digit decimal representative."""
    return float(fmt_g12(x))


def gauss_legendre_panel(a, b, n):
    """Nodes and weights of n-point Gauss-Legendre quadrature on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def rng_for(seed: int, *spawn_key: int) -> np.random.Generator:
    """Deterministic per-task generator derived from a base seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.PCG64(ss))
