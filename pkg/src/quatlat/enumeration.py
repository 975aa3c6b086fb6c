"""Complete enumeration of norm-one order elements under per-embedding
Frobenius-norm caps, congruence filtering, window counting, and index/volume
proxies.

Completeness comes from exact integer coordinate boxes: at every split place
the embedded Frobenius norm is the positive-definite form

    ||iota_j(alpha)||^2 = 2 x_j^2 + 2 a_j y_j^2
                          + b_j^2 (w_j + z_j sqrt(a_j))^2 + (w_j - z_j sqrt(a_j))^2,

and at a definite (non-split) place the reduced norm itself is positive
definite and pinned to 1, so every coefficient coordinate lies in an explicit
integer interval.  The scan (see _kernels) never rejects by floating point:
norm-one candidates are produced by an exact integer solve, and the float cap
comparison is the only boundary-sensitive step, applied identically in every
code path.  One representative of each +-alpha pair is kept (first nonzero
coordinate positive), and results are returned in canonical coordinate order,
so equal specs and caps give byte-identical output regardless of sharding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import BudgetExceededError, ConfigError
from .numberfield import Level
from .quaternion import QuaternionAlgebra, Quaternion, embed_matrix
from .util import rng_for

_SANITY_CACHE: set = set()
DEFAULT_BUDGET = 200_000_000


@dataclass(frozen=True)
class LatticeSpec:
    """A congruence lattice: norm-one units of the standard order, filtered
    to alpha = 1 mod (level.q), embedded in PSL(2,R)^d at the split places.

    conjugators (one per split place) realize commensurable copies
    g^{-1} Lambda g; the shipped experiments use the identity.
    """

    algebra: QuaternionAlgebra
    level: Level
    conjugators: Optional[tuple] = None
    sanity_height: int = 6

    def __post_init__(self):
        for c in (self.algebra.a, self.algebra.b):
            if not c.is_integral():
                raise ConfigError("a, b must be integral for the order scan")
        key = (self.algebra.field.D,
               self.algebra.a.p, self.algebra.a.q,
               self.algebra.b.p, self.algebra.b.q, self.sanity_height)
        if key not in _SANITY_CACHE:
            self.algebra.division_sanity(self.sanity_height)
            _SANITY_CACHE.add(key)
        if self.conjugators is not None and len(self.conjugators) != self.algebra.d:
            raise ConfigError("need one conjugator per split place")

    @property
    def d(self) -> int:
        return self.algebra.d

    def at_level(self, q: int) -> "LatticeSpec":
        return LatticeSpec(self.algebra, Level(q), self.conjugators, self.sanity_height)


@dataclass(frozen=True)
class LatticePoint:
    alpha: Quaternion
    matrices: np.ndarray     # (d, 2, 2)
    norms_sq: np.ndarray     # (d,)
    traces: np.ndarray       # (d,) absolute traces

    @property
    def is_identity(self) -> bool:
        return bool(np.allclose(self.norms_sq, 2.0, atol=1e-12) and
                    self.alpha.y.is_zero() and self.alpha.w.is_zero() and
                    self.alpha.z.is_zero())


class EnumerationResult:
    """Structure-of-arrays result: coords plus embedded data per point."""

    def __init__(self, spec: LatticeSpec, caps, coords: np.ndarray):
        self.spec = spec
        self.caps = np.asarray(caps, dtype=float)
        self.coords = coords
        alg = spec.algebra
        places = alg.split_places
        n = len(coords)
        d = len(places)
        self.matrices = np.empty((n, d, 2, 2))
        self.norms_sq = np.empty((n, d))
        self.traces = np.empty((n, d))
        om, sqa, bj = _embed_consts(alg)
        for jj, j in enumerate(places):
            x = coords[:, 0] + coords[:, 1] * om[j - 1]
            y = coords[:, 2] + coords[:, 3] * om[j - 1]
            w = coords[:, 4] + coords[:, 5] * om[j - 1]
            z = coords[:, 6] + coords[:, 7] * om[j - 1]
            sq = sqa[j - 1]
            self.matrices[:, jj, 0, 0] = x + y * sq
            self.matrices[:, jj, 0, 1] = bj[j - 1] * (w + z * sq)
            self.matrices[:, jj, 1, 0] = w - z * sq
            self.matrices[:, jj, 1, 1] = x - y * sq
            self.norms_sq[:, jj] = np.sum(self.matrices[:, jj] ** 2, axis=(1, 2))
            self.traces[:, jj] = np.abs(2.0 * x)
        if spec.conjugators is not None:
            for jj, g in enumerate(spec.conjugators):
                gm, gi = g.m, g.inv().m
                self.matrices[:, jj] = np.einsum(
                    "ij,njk,kl->nil", gi, self.matrices[:, jj], gm)
                self.norms_sq[:, jj] = np.sum(self.matrices[:, jj] ** 2, axis=(1, 2))
                self.traces[:, jj] = np.abs(self.matrices[:, jj, 0, 0]
                                            + self.matrices[:, jj, 1, 1])

    def __len__(self):
        return len(self.coords)

    @property
    def identity_mask(self) -> np.ndarray:
        m = np.zeros(len(self.coords), dtype=bool)
        ident = np.zeros(8, dtype=np.int64)
        ident[0] = 1
        m[np.all(self.coords == ident, axis=1)] = True
        return m

    def point(self, i: int) -> LatticePoint:
        alpha = self.spec.algebra.from_integral_coords([int(c) for c in self.coords[i]])
        return LatticePoint(alpha, self.matrices[i], self.norms_sq[i], self.traces[i])

    def points(self):
        for i in range(len(self.coords)):
            yield self.point(i)


def _embed_consts(alg: QuaternionAlgebra):
    """Per-place floats: omega, sqrt(a_j) (0 at definite places), b_j."""
    f = alg.field
    om = np.array([(f.element(0, 1) if not f.basis_is_half_integral
                    else f.from_integral_coords(0, 1)).embed(j) for j in (1, 2)])
    a = np.array([alg.a.embed(j) for j in (1, 2)])
    b = np.array([alg.b.embed(j) for j in (1, 2)])
    split = [j in alg.split_places for j in (1, 2)]
    sqa = np.array([math.sqrt(a[i]) if split[i] else 0.0 for i in range(2)])
    return om, sqa, b


def _place_data(spec: LatticeSpec, caps):
    alg = spec.algebra
    om, sqa, b = _embed_consts(alg)
    a = np.array([alg.a.embed(j) for j in (1, 2)])
    kind = np.array([0 if j in alg.split_places else 1 for j in (1, 2)],
                    dtype=np.int64)
    cap = np.empty(2)
    it = iter(np.asarray(caps, dtype=float))
    for i in range(2):
        cap[i] = next(it) if kind[i] == 0 else 1.0 + 1e-9
    return kind, om, a, b, sqa, cap


def _int_constants(alg: QuaternionAlgebra):
    f = alg.field
    e0 = (f.D - 1) // 4 if f.basis_is_half_integral else f.D
    e1 = 1 if f.basis_is_half_integral else 0

    def coords(x):
        u, v = x.integral_coords
        return int(u), int(v)

    a0, a1 = coords(alg.a)
    b0, b1 = coords(alg.b)
    ab0, ab1 = coords(alg.a * alg.b)
    return e0, e1, a0, a1, b0, b1, ab0, ab1


def _pair_box(B1: float, B2: float, om1: float, om2: float):
    """Integer box for (u, v) with |u + v om_j| <= B_j at both places."""
    det = abs(om1 - om2)
    vmax = (B1 + B2) / det + 1e-9
    umax = (B1 * abs(om2) + B2 * abs(om1)) / det + 1e-9
    return int(math.floor(umax)), int(math.floor(vmax))


def _coefficient_boxes(spec: LatticeSpec, caps):
    """Inclusive coordinate ranges for y, w, z from the per-place bounds."""
    kind, om, a, b, sqa, cap = _place_data(spec, caps)
    By, Bw, Bz = np.empty(2), np.empty(2), np.empty(2)
    for i in range(2):
        if kind[i] == 0:
            By[i] = math.sqrt(cap[i] / (2.0 * a[i]))
            rw = math.sqrt(cap[i])
            Bw[i] = 0.5 * (rw / abs(b[i]) + rw)
            Bz[i] = 0.5 * (rw / abs(b[i]) + rw) / sqa[i]
        else:
            By[i] = math.sqrt(cap[i] / abs(a[i]))
            Bw[i] = math.sqrt(cap[i] / abs(b[i]))
            Bz[i] = math.sqrt(cap[i] / abs(a[i] * b[i]))
    uy, vy = _pair_box(By[0], By[1], om[0], om[1])
    uw, vw = _pair_box(Bw[0], Bw[1], om[0], om[1])
    uz, vz = _pair_box(Bz[0], Bz[1], om[0], om[1])
    ranges = np.array([[-vy, vy], [-uw, uw], [-vw, vw], [-uz, uz], [-vz, vz]],
                      dtype=np.int64)
    return (-uy, uy), ranges


def _stepped(lo: int, hi: int, q: int) -> int:
    if hi < lo:
        return 0
    return (hi - (lo + ((-lo) % q))) // q + 1 if lo + ((-lo) % q) <= hi else 0


def estimate_scan_size(spec: LatticeSpec, caps) -> float:
    """Estimated loop iterations of the pruned (y, w, z) scan.

    Counts each coefficient box once per surviving prefix, with survivors
    estimated from the band area over the coordinate-lattice covolume.
    """
    kind, om, a, b, sqa, cap = _place_data(spec, caps)
    By, Bw, Bz = np.empty(2), np.empty(2), np.empty(2)
    for i in range(2):
        if kind[i] == 0:
            By[i] = math.sqrt(cap[i] / (2.0 * a[i]))
            rw = math.sqrt(cap[i])
            Bw[i] = 0.5 * (rw / abs(b[i]) + rw)
            Bz[i] = Bw[i] / sqa[i]
        else:
            By[i] = math.sqrt(cap[i] / abs(a[i]))
            Bw[i] = math.sqrt(cap[i] / abs(b[i]))
            Bz[i] = math.sqrt(cap[i] / abs(a[i] * b[i]))
    det = abs(om[0] - om[1])
    q = float(spec.level.q)
    (uy_lo, uy_hi), ranges = _coefficient_boxes(spec, caps)
    box_y = (_stepped(uy_lo, uy_hi, spec.level.q)
             * max(_stepped(int(ranges[0, 0]), int(ranges[0, 1]), spec.level.q), 1))
    n_y = max(1.0, 4.0 * By[0] * By[1] / det / q / q)
    n_vw = (Bw[0] + Bw[1]) / det / q + 1.0
    n_w = max(1.0, 4.0 * Bw[0] * Bw[1] / det / q / q)
    n_vz = (Bz[0] + Bz[1]) / det / q + 1.0
    # per-(y, w) z-interval lengths at maximal remainders
    zlen = np.empty(2)
    for i in range(2):
        if kind[i] == 0:
            rw = math.sqrt(cap[i])
            zlen[i] = 2.0 * min(rw, rw / abs(b[i])) / sqa[i]
        else:
            zlen[i] = 2.0 * math.sqrt(cap[i] / abs(a[i] * b[i]))
    n_z = max(1.0, zlen[0] * zlen[1] / det / q / q)
    return box_y + n_y * (n_vw + n_w * (n_vz + n_z))


_ENUM_CACHE: dict = {}
_ENUM_CACHE_MAX = 24


def _spec_key(spec: LatticeSpec):
    a, b = spec.algebra.a, spec.algebra.b
    return (spec.algebra.field.D, a.p, a.q, b.p, b.q, spec.level.q,
            spec.conjugators is None)


def enumerate_points(spec: LatticeSpec, caps, budget: int = DEFAULT_BUDGET,
                     shards: int = 1, workers: int = 1,
                     cache: bool = True) -> EnumerationResult:
    """All norm-one congruence points with ||iota_j(alpha)||^2 <= caps[j]
    at every split place, one representative per +-alpha class (a class is
    congruent when either sign is = 1 mod q).

    Raises BudgetExceededError before starting when the pruned box scan
    would exceed `budget` candidate iterations.  Results for identical
    (spec, caps) are cached; the scan is deterministic, so cached and fresh
    results coincide.
    """
    caps = np.asarray(caps, dtype=float)
    ckey = _spec_key(spec) + tuple(caps) if cache else None
    if ckey is not None and ckey in _ENUM_CACHE:
        return _ENUM_CACHE[ckey]
    if caps.shape != (spec.d,):
        raise ValueError(f"need {spec.d} caps, got {caps.shape}")
    if spec.conjugators is not None and any(
            not np.allclose(g.m, np.eye(2)) for g in spec.conjugators):
        # enumerate in the inflated ball, then filter on conjugated norms
        infl = np.array([2.0 * math.cosh(
            math.acosh(max(c / 2.0, 1.0)) + 2.0 * math.acosh(max(g.frob_norm_sq() / 2.0, 1.0)))
            for c, g in zip(caps, spec.conjugators)])
        base = LatticeSpec(spec.algebra, spec.level, None, spec.sanity_height)
        res = enumerate_points(base, infl, budget, shards, workers)
        conj = EnumerationResult(spec, caps, res.coords)
        keep = np.all(conj.norms_sq <= caps[None, :], axis=1)
        return EnumerationResult(spec, caps, conj.coords[keep])

    est = estimate_scan_size(spec, caps)
    if est > budget:
        raise BudgetExceededError(
            f"box scan needs ~{est:.3g} candidate iterations > budget {budget:.3g}; "
            "raise the budget or lower the caps")
    _check_overflow(spec, caps)

    (uy_lo, uy_hi), ranges = _coefficient_boxes(spec, caps)
    q = spec.level.q
    ints = _int_constants(spec.algebra)
    kind, om, a, b, sqa, cap = _place_data(spec, caps)
    place_data = (kind, om, a, b, sqa, cap)
    scan = _kernels.active_scan()

    shards = max(1, int(shards))
    edges = np.linspace(uy_lo, uy_hi + 1, shards + 1).astype(np.int64)
    tasks = [(int(edges[i]), int(edges[i + 1] - 1)) for i in range(shards)
             if edges[i] <= edges[i + 1] - 1]

    def run(task):
        lo, hi = task
        return scan(lo, hi, ranges, q, ints, place_data)

    if workers > 1 and len(tasks) > 1 and _kernels.NUMBA_AVAILABLE:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=int(workers)) as ex:
            parts = list(ex.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    coords = np.vstack(parts) if parts else np.empty((0, 8), dtype=np.int64)
    if len(coords):
        order = np.lexsort(coords.T[::-1])
        coords = coords[order]
    res = EnumerationResult(spec, caps, coords)
    if ckey is not None:
        if len(_ENUM_CACHE) >= _ENUM_CACHE_MAX:
            _ENUM_CACHE.pop(next(iter(_ENUM_CACHE)))
        _ENUM_CACHE[ckey] = res
    return res


def _check_overflow(spec: LatticeSpec, caps) -> None:
    """int64 safety: the x-solve works with A ~ 4|N|, disc ~ A^2."""
    (uy_lo, uy_hi), ranges = _coefficient_boxes(spec, caps)
    umax = max(abs(uy_lo), abs(uy_hi),
               *(int(max(abs(lo), abs(hi))) for lo, hi in ranges))
    e0, e1, a0, a1, b0, b1, ab0, ab1 = _int_constants(spec.algebra)
    coef = max(abs(a0) + abs(a1), abs(b0) + abs(b1), abs(ab0) + abs(ab1))
    nmax = 1 + 3 * coef * (1 + e0 + e1) * (umax + 1) ** 2 * 3
    if (6 * nmax) ** 2 + 4 * (4 * e0 + 1) * nmax ** 2 > 2 ** 62:
        raise ConfigError("caps too large for 64-bit exact arithmetic")


# ---------------------------------------------------------------------------
# window counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountQuery:
    """Window constraints per split place (0-based indices).

    j0: the place with ||gamma||^2 <= x; k: shell places with
    ||gamma||^2 in [k, k+1) and |tr| < 2; eta: places with ||gamma|| <= C and
    ||tr|-2| <= eta; j3: places with ||gamma|| <= C only.
    """

    x: float
    j0: int
    k: tuple = ()          # ((place, k), ...)
    eta: tuple = ()        # ((place, eta), ...)
    j3: tuple = ()
    C: float = 3.0

    def validate(self, d: int) -> None:
        places = [self.j0] + [p for p, _ in self.k] + [p for p, _ in self.eta] \
            + list(self.j3)
        if sorted(places) != list(range(d)):
            raise ValueError(f"window constraints must partition 0..{d-1}, got {places}")
        if self.x < 1:
            raise ValueError("x >= 1 required")
        for _, e in self.eta:
            if not (0 < e < 1):
                raise ValueError("eta in (0,1) required")
        if self.C < 1:
            raise ValueError("C >= 1 required")


@dataclass(frozen=True)
class CountReport:
    count: int
    x: float
    k_prod: float
    eta_prod: float
    v_est: float
    bound_rhs: float


def count_N(spec: LatticeSpec, query: CountQuery, v_est: float = float("nan"),
            eps: float = 0.1, budget: int = DEFAULT_BUDGET) -> CountReport:
    """Number of nonidentity congruence points in the window."""
    d = spec.d
    query.validate(d)
    caps = np.empty(d)
    caps[query.j0] = query.x
    for p, k in query.k:
        caps[p] = k + 1.0
    for p, _ in query.eta:
        caps[p] = query.C ** 2
    for p in query.j3:
        caps[p] = query.C ** 2
    res = enumerate_points(spec, caps, budget=budget)
    keep = ~res.identity_mask
    for p, k in query.k:
        keep &= (res.norms_sq[:, p] >= k) & (res.norms_sq[:, p] < k + 1.0)
        keep &= res.traces[:, p] < 2.0
    for p, e in query.eta:
        keep &= np.abs(res.traces[:, p] - 2.0) <= e
    count = int(np.count_nonzero(keep))
    k_prod = float(np.prod([k for _, k in query.k])) if query.k else 1.0
    eta_prod = float(np.prod([e for _, e in query.eta])) if query.eta else 1.0
    bound = float("nan")
    if np.isfinite(v_est):
        x = query.x
        bound = eta_prod * (x ** (1 + eps) / v_est
                            + k_prod ** eps * x ** (0.5 + eps) / v_est ** (2 / 3))
    return CountReport(count, query.x, k_prod, eta_prod, v_est, bound)


# ---------------------------------------------------------------------------
# covolume / index proxy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexEstimate:
    value: float
    err: float
    n_full: int
    n_level: int


def estimate_index(spec: LatticeSpec, caps, n_boot: int = 400,
                   seed: int = 0x5EED, budget: int = DEFAULT_BUDGET) -> IndexEstimate:
    """Ratio of full-lattice to congruence point counts in a ball, as a proxy
    for the index [Lambda : Lambda(q)] ~ vol ratio.

    The error bar is a parametric (Poisson) bootstrap of both counts, which
    stays meaningful for the sparse congruence samples.
    """
    q = spec.level.q
    full = enumerate_points(spec.at_level(1), caps, budget=budget)
    if len(full) < 100:
        raise BudgetExceededError("insufficient sample: fewer than 100 points at level 1")
    if q == 1:
        return IndexEstimate(1.0, 0.0, len(full), len(full))
    sub = enumerate_points(spec, caps, budget=budget)
    if len(sub) < 3:
        raise BudgetExceededError(
            f"insufficient sample: only {len(sub)} points at level {q}")
    rng = rng_for(seed, 7)
    nf = rng.poisson(len(full), n_boot).astype(float)
    ns = np.maximum(rng.poisson(len(sub), n_boot).astype(float), 1.0)
    return IndexEstimate(float(len(full) / len(sub)), float(np.std(nf / ns)),
                         len(full), len(sub))


# ---------------------------------------------------------------------------
# scaling experiment
# ---------------------------------------------------------------------------

def scaling_experiment(spec: LatticeSpec, x_grid, levels, C: float = 3.0,
                       eps: float = 0.1, index_caps=None,
                       budget: int = DEFAULT_BUDGET) -> dict:
    """Counts N(x) across levels with the leading-place window, the fitted
    bound constants, and the log-log slope at level 1.

    Returns {"rows": [(level, x, count, bound, fitted_C)], "slope": float,
    "fitted": {level: C_level}}.
    """
    d = spec.d
    x_grid = sorted(float(x) for x in x_grid)
    if index_caps is None:
        index_caps = np.full(d, 250.0)
    rows = []
    fitted = {}
    slope = float("nan")
    for q in sorted(int(q) for q in levels):
        lv = spec.at_level(q)
        v = estimate_index(lv, index_caps, budget=budget).value if q > 1 else 1.0
        counts = []
        for x in x_grid:
            query = CountQuery(x=x, j0=0, j3=tuple(range(1, d)), C=C)
            rep = count_N(lv, query, v_est=v, eps=eps, budget=budget)
            counts.append(rep.count)
            rows.append((q, x, rep.count, rep.bound_rhs, float("nan")))
        ratios = [c / r[3] for c, r in zip(counts, rows[-len(x_grid):]) if c > 0]
        cfit = max(ratios) if ratios else float("nan")
        fitted[q] = cfit
        start = len(rows) - len(x_grid)
        for i in range(start, len(rows)):
            rows[i] = rows[i][:4] + (cfit,)
        if q == 1:
            xs = [x for x, c in zip(x_grid, counts) if c > 0]
            cs = [c for c in counts if c > 0]
            if len(xs) >= 2:
                slope = float(np.polyfit(np.log(xs), np.log(cs), 1)[0])
    return {"rows": rows, "slope": slope, "fitted": fitted}
