"""Geometric side of the trace formula in the ball-covering form, and the
multiplicity-budget bookkeeping.

For a product test function F = prod_j F^(j) and a congruence lattice, the
geometric side is organized as

    V_hat * F(1)  +  [index] * sum'_gamma prod_j int_{B_c} F^(j)(g^{-1} gamma_j g) dg,

where the primed sum runs over nonidentity congruence classes whose trace is
elliptic at every K-type-window factor (the full-orbit integral of those
factors vanishes on |tr| >= 2), V_hat = V1 * index is the covolume proxy, and
c is large enough that a fundamental domain fits in B_c^d.  Budgets divide
the absolute-value version of the right-hand side by the numerically
evaluated spectral mass of the target representation (never its asymptotic
form): with e^R = T(pi) V_hat this yields the single-representation budget,
with e^R = V_hat |T|^2 the dyadic-box budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .enumeration import (LatticeSpec, enumerate_points, estimate_index,
                          DEFAULT_BUDGET)
from .errors import CapShortfallError, ConfigError
from .orbital import orbital_ball_many
from .spherical import RadialFunction, SpectralFunction, convolve, spherical_transform
from .testfuncs import (KSumFunction, TestFunction, base_bump, make_dis,
                        make_ex, make_phi, make_s, make_sp)
from .util import std_bump

# ---------------------------------------------------------------------------
# unitary-dual parameters
# ---------------------------------------------------------------------------

COMPLEMENTARY, PRINCIPAL, DISCRETE = "c", "p", "d"


@dataclass(frozen=True)
class RepParams:
    """An irreducible representation of the product group, as factor data:
    ('c', s) with s in (0, 1/2);  ('p', r) with r real;  ('d', m) integer
    m != 0."""

    factors: tuple

    def __post_init__(self):
        for kind, v in self.factors:
            if kind == COMPLEMENTARY and not (0 < v < 0.5):
                raise ValueError("complementary parameter must lie in (0, 1/2)")
            if kind == DISCRETE and (int(v) != v or v == 0):
                raise ValueError("discrete parameter must be a nonzero integer")
            if kind not in (COMPLEMENTARY, PRINCIPAL, DISCRETE):
                raise ValueError(f"unknown factor kind {kind!r}")

    @property
    def d(self) -> int:
        return len(self.factors)


def rep_T(pi: RepParams) -> float:
    """Spectral size T(pi) = prod_j T_j: 1, 1+|r|, |m| per factor kind."""
    out = 1.0
    for kind, v in pi.factors:
        if kind == PRINCIPAL:
            out *= 1.0 + abs(v)
        elif kind == DISCRETE:
            out *= abs(v)
    return out


def rep_p(pi: RepParams) -> float:
    """Integrability exponent p(pi) = max_j p_j: 1/s complementary, else 2."""
    out = 2.0
    for kind, v in pi.factors:
        if kind == COMPLEMENTARY:
            out = max(out, 1.0 / v)
    return out


def rep_casimir(pi: RepParams) -> tuple:
    """Per-factor Casimir eigenvalues s(1-s) / (1/4 + r^2 shifted) / |m|(1-|m|)."""
    out = []
    for kind, v in pi.factors:
        if kind == COMPLEMENTARY:
            out.append(v * (1.0 - v))
        elif kind == PRINCIPAL:
            out.append(0.25 + v * v)
        else:
            out.append(abs(v) * (1.0 - abs(v)))
    return tuple(out)


def spectral_points(pi: RepParams) -> tuple:
    """The r-parameter of each factor (s = 1/2 + i r convention)."""
    pts = []
    for kind, v in pi.factors:
        if kind == COMPLEMENTARY:
            pts.append(1j * (0.5 - v))
        elif kind == PRINCIPAL:
            pts.append(complex(v))
        else:
            pts.append(1j * (abs(v) - 0.5))
    return tuple(pts)


def parse_pi(text: str) -> RepParams:
    """Parse factor strings like 'c0.3,p5.0,d3'."""
    factors = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        kind, val = tok[0], tok[1:]
        if kind == DISCRETE:
            factors.append((kind, int(val)))
        elif kind in (COMPLEMENTARY, PRINCIPAL):
            factors.append((kind, float(val)))
        else:
            raise ConfigError(f"cannot parse representation factor {tok!r}")
    return RepParams(tuple(factors))


@dataclass(frozen=True)
class DyadicBox:
    """A dyadic spectral window: T_j a power of two per factor (values < 2
    mean the small block T(pi_j) < 2), with the temperedness floor p0.

    kinds marks the window type of each T_j >= 2 factor: 'sp' (spherical),
    'dis' or 'dis_conj' (K-type windows).
    """

    T_vec: tuple
    p0: float
    kinds: Optional[tuple] = None

    def __post_init__(self):
        if self.p0 <= 2:
            raise ValueError("p0 > 2 required")
        if not any(t < 2 for t in self.T_vec):
            raise ValueError("the box needs a small factor to host the "
                             "exceptional spectral parameter")

    @property
    def j0(self) -> int:
        return next(i for i, t in enumerate(self.T_vec) if t < 2)

    def size(self) -> float:
        return float(np.prod(self.T_vec))


def dyadic_boxes(T0: float, d: int, p0: float):
    """All dyadic windows with |T| <= T0 (T_j in {1, 2, 4, ...}), at least one
    small factor; their number is O(log(T0)^d)."""
    kmax = int(math.floor(math.log2(max(T0, 1.0))))
    out = []

    def rec(prefix):
        if len(prefix) == d:
            if any(t < 2 for t in prefix) and float(np.prod(prefix)) <= T0:
                out.append(DyadicBox(tuple(prefix), p0))
            return
        for k in range(0, kmax + 1):
            if float(np.prod(prefix, initial=1.0)) * 2 ** k <= T0:
                rec(prefix + [2.0 ** k])
    rec([])
    return out


# ---------------------------------------------------------------------------
# auxiliary one-place test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoSidedBump:
    """f * f-check + its conjugate for a weight-1 bump f: the K-type +-1
    window used at small-T factors.  eval_kak = 2 cos(sigma) p(t)."""

    profile: object
    support_radius: float
    scale: float

    def eval_kak(self, angle_sum, t):
        return (2.0 * self.scale) * np.cos(np.asarray(angle_sum)) \
            * np.real(self.profile(np.asarray(t, dtype=float)))

    def __call__(self, t):
        return (2.0 * self.scale) * np.real(self.profile(np.asarray(t, dtype=float)))

    def at_identity(self):
        return complex(2.0 * self.scale * np.real(self.profile(np.asarray(0.0))))


@lru_cache(maxsize=1)
def _weight1_pair():
    """(convolution profile of f*f-check, transform callable) for the fixed
    weight-1 bump f supported on B_1 (before normalization)."""
    f1 = RadialFunction(1, std_bump, 1.0)
    conv = convolve(f1, f1.reflected())

    @lru_cache(maxsize=4096)
    def sf(rr: complex) -> complex:
        return spherical_transform(f1, rr)

    def h(r):
        r = complex(r)
        return sf(r) * np.conj(sf(r.conjugate()))

    return conv, h


@lru_cache(maxsize=4)
def small_bump_testfn(weight: int) -> TestFunction:
    """The fixed f * f-check at K-type `weight` (0 or 1), normalized so the
    transform equals 1 at the lowest spectral point r = i/2."""
    if weight == 0:
        f0 = base_bump()
        conv = convolve(f0, f0.reflected())

        @lru_cache(maxsize=4096)
        def sf0(rr: complex) -> complex:
            return spherical_transform(f0, rr)

        def h_raw(r):
            r = complex(r)
            return sf0(r) * np.conj(sf0(r.conjugate()))
    else:
        conv, h_raw = _weight1_pair()
    norm = float(np.real(h_raw(0.5j)))
    prof = conv.profile
    realized = RadialFunction(weight, lambda t: np.asarray(prof(t)) / norm, 1.0 + 1.0)
    return TestFunction(kind="bump", params=(weight,), realized=realized,
                        transform=SpectralFunction(lambda r: h_raw(r) / norm, 2.0))


@lru_cache(maxsize=4)
def symmetrized_weight1_testfn() -> TestFunction:
    """f * f-check + conjugate (K-types +-1), normalized at r = i/2; the
    small-block factor of the dyadic-box assembly."""
    conv, h_raw = _weight1_pair()
    norm = 2.0 * float(np.real(h_raw(0.5j)))

    def h(r):
        # both K-type components contribute the same spherical mass
        return 2.0 * np.real(h_raw(r)) / norm

    realized = TwoSidedBump(conv.profile, 2.0, 1.0 / norm)
    return TestFunction(kind="bump", params=(1, "sym"), realized=realized,
                        transform=SpectralFunction(h, 2.0))


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_testfn(pi: RepParams, R: float) -> tuple:
    """Per-factor test functions for a single non-tempered representation.

    The least-tempered complementary factor carries the plateau pair; other
    small factors carry fixed bumps normalized at their spectral point;
    principal factors carry shifted windows; |m| >= 2 discrete factors carry
    the normalized weight-m kernel.
    """
    comp = [(i, v) for i, (k, v) in enumerate(pi.factors) if k == COMPLEMENTARY]
    if not comp:
        raise ConfigError("representation is tempered: no complementary factor")
    j0 = min(comp, key=lambda iv: iv[1])[0]
    fns = []
    for i, (kind, v) in enumerate(pi.factors):
        if i == j0:
            fns.append(make_ex(R))
        elif kind == COMPLEMENTARY:
            fns.append(small_bump_testfn(0))
        elif kind == PRINCIPAL:
            fns.append(make_s(max(1.0, abs(v))))
        elif abs(int(v)) == 1:
            fns.append(small_bump_testfn(1))
        else:
            fns.append(make_phi(int(v)))
    return tuple(fns)


def assemble_box_testfn(box: DyadicBox, R: float) -> tuple:
    """Per-factor test functions for a dyadic window.

    Spherical windows use the spectral-window function at parameter 2*T_j so
    the whole window [T_j, 2T_j) lies inside its guaranteed-positive range
    |r| <= 2*T_j; K-type windows use the smoothed kernel sums.
    """
    kinds = box.kinds or tuple("sp" for _ in box.T_vec)
    fns = []
    for i, (T, kd) in enumerate(zip(box.T_vec, kinds)):
        if i == box.j0:
            fns.append(make_ex(R))
        elif T < 2:
            fns.append(symmetrized_weight1_testfn())
        elif kd == "sp":
            fns.append(make_sp(2.0 * T))
        elif kd == "dis":
            fns.append(make_dis(T))
        elif kd == "dis_conj":
            fns.append(make_dis(T, conj=True))
        else:
            raise ConfigError(f"unknown window kind {kd!r}")
    return tuple(fns)


# ---------------------------------------------------------------------------
# geometric side
# ---------------------------------------------------------------------------

def effective_support(fn: TestFunction, tail_eps: float) -> float:
    """Support radius, or the radius beyond which the kernel is below
    tail_eps relative to its value at the identity."""
    realized = fn.realized
    if np.isfinite(realized.support_radius):
        return float(realized.support_radius)
    if isinstance(realized, KSumFunction):
        m_min = min(abs(m) for m in realized.ms)
    else:
        m_min = abs(realized.weight)
    # cosh(t/2)^(-2 m_min) <= tail_eps
    return 2.0 * math.acosh(tail_eps ** (-1.0 / (2.0 * m_min)))


@dataclass
class GeomSideReport:
    identity_term: float
    elliptic_sum: float
    residual_sum: float
    elliptic_sum_abs: float
    residual_sum_abs: float
    total: float
    total_budget: float
    v_hat: float
    index_est: float
    n_points: int
    n_contributing: int
    caps_required: tuple
    params: dict
    rows: list = field(default_factory=list)


def geometric_side(spec: LatticeSpec, fns, c: float, enum_caps=None,
                   v1: float = 1.0, index_caps=None, tail_eps: float = 1e-6,
                   budget: int = DEFAULT_BUDGET, max_rows: int = 2000,
                   quad_nodes: int = 32) -> GeomSideReport:
    """Assemble the ball-covering geometric side for a product test function.

    enum_caps, when given, is a hard ceiling: if the support of the test
    function (plus the 2c conjugation slack) needs more, the computation
    aborts with CapShortfallError rather than silently truncating.
    """
    d = spec.d
    if len(fns) != d:
        raise ValueError(f"need {d} factor functions")
    caps_req = np.array([2.0 * math.cosh(effective_support(fn, tail_eps) + 2.0 * c)
                         for fn in fns])
    if enum_caps is not None:
        enum_caps = np.asarray(enum_caps, dtype=float)
        short = caps_req > enum_caps + 1e-9
        if short.any():
            raise CapShortfallError(
                f"required caps {caps_req.tolist()} exceed configured caps "
                f"{enum_caps.tolist()} at places {np.nonzero(short)[0].tolist()}")
    if spec.level.q == 1:
        idx_est = 1.0
    else:
        if index_caps is None:
            raise ConfigError("index_caps required for levels above 1")
        idx_est = estimate_index(spec, index_caps, budget=budget).value
    v_hat = v1 * idx_est

    res = enumerate_points(spec, caps_req, budget=budget)
    nonid = ~res.identity_mask
    # K-type-window trace filter: those factors vanish on |tr| >= 2
    keep = nonid.copy()
    for j, fn in enumerate(fns):
        if fn.kind in ("phi", "dis"):
            keep &= res.traces[:, j] < 2.0
    idxs = np.nonzero(keep)[0]

    f_at_1 = complex(np.prod([fn.at_identity() for fn in fns]))
    identity_term = v_hat * float(np.real(f_at_1))

    signed = np.ones(len(idxs), dtype=complex)
    absval = np.ones(len(idxs), dtype=float)
    for j, fn in enumerate(fns):
        mats = res.matrices[idxs, j]
        vs, _ = orbital_ball_many(fn, mats, c, n_t=quad_nodes, n_phi=quad_nodes)
        va, _ = orbital_ball_many(fn, mats, c, n_t=quad_nodes, n_phi=quad_nodes,
                                  absolute=True)
        signed *= vs
        absval *= np.real(va)

    elliptic = np.all(res.traces[idxs] < 2.0, axis=1) if len(idxs) else \
        np.zeros(0, dtype=bool)
    ell_sum = idx_est * math.fsum(np.real(signed[elliptic]))
    res_sum = idx_est * math.fsum(np.real(signed[~elliptic]))
    ell_abs = idx_est * math.fsum(absval[elliptic])
    res_abs = idx_est * math.fsum(absval[~elliptic])

    rows = []
    for k, i in enumerate(idxs[:max_rows]):
        rows.append({
            "traces": [float(t) for t in res.traces[i]],
            "norms_sq": [float(nv) for nv in res.norms_sq[i]],
            "signed": float(np.real(signed[k])),
            "absolute": float(absval[k]),
            "elliptic": bool(elliptic[k]),
        })

    return GeomSideReport(
        identity_term=identity_term,
        elliptic_sum=ell_sum,
        residual_sum=res_sum,
        elliptic_sum_abs=ell_abs,
        residual_sum_abs=res_abs,
        total=identity_term + ell_sum + res_sum,
        total_budget=identity_term + ell_abs + res_abs,
        v_hat=v_hat,
        index_est=idx_est,
        n_points=int(nonid.sum()),
        n_contributing=len(idxs),
        caps_required=tuple(float(x) for x in caps_req),
        params={"c": c, "level": spec.level.q, "tail_eps": tail_eps},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# budgets
# ---------------------------------------------------------------------------

def _transform_at(fn: TestFunction, r: complex) -> float:
    return float(np.real(fn.transform(r)))


def theorem1_budget(spec: LatticeSpec, pi: RepParams, c: float = 1.0,
                    v1: float = 1.0, index_caps=None, enum_caps=None,
                    r_min: float = 1.0, budget: int = DEFAULT_BUDGET,
                    tail_eps: float = 1e-6) -> dict:
    """Single-representation multiplicity budget with e^R = T(pi) V_hat.

    The implied bound is (geometric budget) / h(r_pi) with h evaluated
    numerically at the representation's spectral point; the theoretical
    target is (V_hat T)^{2 s0} with s0 = 1/p(pi).
    """
    T = rep_T(pi)
    p = rep_p(pi)
    s0 = 1.0 / p
    if spec.level.q == 1:
        idx = 1.0
    else:
        if index_caps is None:
            raise ConfigError("index_caps required for levels above 1")
        idx = estimate_index(spec, index_caps, budget=budget).value
    v_hat = v1 * idx
    R = max(r_min, math.log(T * v_hat))
    fns = assemble_testfn(pi, R)
    geom = geometric_side(spec, fns, c, enum_caps=enum_caps, v1=v1,
                          index_caps=index_caps, budget=budget,
                          tail_eps=tail_eps)
    pts = spectral_points(pi)
    h_factors = [_transform_at(fn, r) for fn, r in zip(fns, pts)]
    h_mass = float(np.prod(h_factors))
    if h_mass <= 0:
        raise ConfigError("spectral mass at the target point is not positive")
    trivial_mass = float(np.prod([_transform_at(fn, 0.5j) for fn in fns]))
    implied = geom.total_budget / h_mass
    target = (v_hat * T) ** (2.0 * s0)
    return {
        "kind": "single-representation",
        "pi": pi.factors,
        "T": T, "p": p, "s0": s0, "R": R,
        "v_hat": v_hat, "index_est": geom.index_est, "c": c,
        "level": spec.level.q,
        "geometric": geom,
        "h_mass": h_mass, "h_factors": h_factors,
        "trivial_h_mass": trivial_mass,
        "implied_budget": implied,
        "theoretical_target": target,
        "ratio": implied / target,
    }


def _window_min_transform(fn: TestFunction, T: float, j_is_small: bool) -> float:
    """Minimal spectral mass of a factor function over its dyadic window."""
    if fn.kind == "bump":
        rs = list(np.linspace(0.0, 1.0, 21)) + \
            [1j * x for x in np.linspace(0.05, 0.5, 10)]
        return min(float(np.real(fn.transform(r))) for r in rs)
    if fn.kind == "sp":
        rs = np.linspace(max(T - 1.0, 0.0), 2.0 * T - 1.0, 41)
        return min(float(np.real(fn.transform(r))) for r in rs)
    if fn.kind == "dis":
        ms = [m for m in range(int(T), int(2 * T) + 1)]
        return min(float(np.real(fn.transform(1j * (m - 0.5)))) for m in ms)
    raise ValueError(f"unexpected factor kind {fn.kind}")


def theorem2_budget(spec: LatticeSpec, box: DyadicBox, c: float = 1.0,
                    v1: float = 1.0, index_caps=None, enum_caps=None,
                    r_min: float = 1.0, budget: int = DEFAULT_BUDGET,
                    tail_eps: float = 1e-6) -> dict:
    """Dyadic-window multiplicity budget with e^R = V_hat |T|^2.

    The lower spectral factor is the product over factors of the minimal
    transform value on the window (numerically evaluated), times the plateau
    pair's value at the least-tempered point s0 = 1/p0; the target is
    (V_hat |T|^2)^{2/p0}.
    """
    if spec.level.q == 1:
        idx = 1.0
    else:
        if index_caps is None:
            raise ConfigError("index_caps required for levels above 1")
        idx = estimate_index(spec, index_caps, budget=budget).value
    v_hat = v1 * idx
    Tsz = box.size()
    R = max(r_min, math.log(v_hat * Tsz ** 2))
    fns = assemble_box_testfn(box, R)
    geom = geometric_side(spec, fns, c, enum_caps=enum_caps, v1=v1,
                          index_caps=index_caps, budget=budget,
                          tail_eps=tail_eps)
    s0 = 1.0 / box.p0
    lowers = []
    for i, fn in enumerate(fns):
        if i == box.j0:
            lowers.append(_transform_at(fn, 1j * (0.5 - s0)))
        else:
            lowers.append(_window_min_transform(fn, box.T_vec[i], box.T_vec[i] < 2))
    h_low = float(np.prod(lowers))
    if h_low <= 0:
        raise ConfigError("window spectral mass is not positive")
    implied = geom.total_budget / h_low
    target = (v_hat * Tsz ** 2) ** (2.0 / box.p0)
    trivial_mass = float(np.prod([_transform_at(fn, 0.5j) for fn in fns]))
    return {
        "kind": "dyadic-box",
        "T_vec": box.T_vec, "p0": box.p0, "R": R,
        "v_hat": v_hat, "index_est": geom.index_est, "c": c,
        "level": spec.level.q,
        "geometric": geom,
        "h_lower": h_low, "h_lower_factors": lowers,
        "trivial_h_mass": trivial_mass,
        "implied_budget": implied,
        "theoretical_target": target,
        "ratio": implied / target,
    }
