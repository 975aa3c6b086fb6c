"""Integer box-scan kernels for norm-one order elements.

The scan iterates the six integral-basis coordinates of the (y, w, z)
quaternion coefficients over exact boxes, prunes with per-embedding partial
sums of the archimedean quadratic form, and solves x^2 = 1 + a y^2 + b w^2
- ab z^2 exactly in O(1) integer arithmetic per candidate (a quadratic in
s^2 with an integer perfect-square discriminant test), so no x loop is ever
entered.  All exactness-critical arithmetic is 64-bit integer; floating
point is used only for the cap comparisons, with identical expressions in
the numba and numpy paths.

The numba kernel is selected by default; set QUATLAT_NO_NUMBA=1 (or any
nonempty value) to force the pure-numpy fallback, which shares the outer
loop structure but vectorizes the z scan.  `benchmarks/bench_enumeration.py`
compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np

_EPS = 1e-9

try:  # pragma: no cover - exercised through the public API
    if os.environ.get("QUATLAT_NO_NUMBA"):
        raise ImportError("numba disabled by QUATLAT_NO_NUMBA")
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True, nogil=True)
def _isqrt(n):
    """Integer floor square root for n >= 0 (int64)."""
    if n < 0:
        return -1
    x = int(math.sqrt(n))
    while x > 0 and x * x > n:
        x -= 1
    while (x + 1) * (x + 1) <= n:
        x += 1
    return x


@njit(cache=True, nogil=True)
def _solve_x(N0, N1, e0, e1, out_uv):
    """All integer (ux, vx) with (ux + vx*omega)^2 = N0 + N1*omega.

    Writes into out_uv (k, 2) and returns the count k (<= 8).
    """
    # reduce to s^2 + D v^2 = A, s v = B with D the field discriminant part
    if e1 == 0:
        D = e0
        if N1 % 2 != 0:
            return 0
        A = N0
        B = N1 // 2
    else:
        D = 4 * e0 + 1
        A = 4 * N0 + 2 * N1
        B = N1
    count = 0
    if A < 0:
        return 0
    disc = A * A - 4 * D * B * B
    if disc < 0:
        return 0
    r = _isqrt(disc)
    if r * r != disc:
        return 0
    for pick in range(2):
        num = A + r if pick == 0 else A - r
        if pick == 1 and r == 0:
            break
        if num % 2 != 0:
            continue
        U = num // 2
        if U < 0:
            continue
        s0 = _isqrt(U)
        if s0 * s0 != U:
            continue
        for sgn in range(2):
            s = s0 if sgn == 0 else -s0
            if sgn == 1 and s0 == 0:
                break
            if s == 0:
                if B != 0:
                    continue
                # v^2 = A / D
                if A % D != 0:
                    continue
                v0 = _isqrt(A // D)
                if v0 * v0 * D != A:
                    continue
                vs0 = v0
                vs1 = -v0
                nv = 1 if v0 == 0 else 2
                for iv in range(nv):
                    v = vs0 if iv == 0 else vs1
                    if e1 == 0:
                        ux, vx = 0, v
                    else:
                        if (0 - v) % 2 != 0:
                            continue
                        ux, vx = (0 - v) // 2, v
                    dup = False
                    for kk in range(count):
                        if out_uv[kk, 0] == ux and out_uv[kk, 1] == vx:
                            dup = True
                            break
                    if not dup:
                        out_uv[count, 0] = ux
                        out_uv[count, 1] = vx
                        count += 1
                continue
            if B % s != 0:
                continue
            v = B // s
            if s * s + D * v * v != A:
                continue
            if e1 == 0:
                ux, vx = s, v
            else:
                if (s - v) % 2 != 0:
                    continue
                ux, vx = (s - v) // 2, v
            dup = False
            for kk in range(count):
                if out_uv[kk, 0] == ux and out_uv[kk, 1] == vx:
                    dup = True
                    break
            if not dup:
                out_uv[count, 0] = ux
                out_uv[count, 1] = vx
                count += 1
    return count


@njit(cache=True, nogil=True)
def _first_nonzero_positive(c0, c1, c2, c3, c4, c5, c6, c7):
    for c in (c0, c1, c2, c3, c4, c5, c6, c7):
        if c != 0:
            return c > 0
    return False


@njit(cache=True, nogil=True)
def _pair_iter_bounds(lo1, hi1, lo2, hi2, om1, om2):
    """Integer v range for embedded values u + v*om_j in [lo_j, hi_j].

    Assumes om1 > om2.  The per-v u interval is computed by the caller.
    """
    vmin = (lo1 - hi2) / (om1 - om2) - _EPS
    vmax = (hi1 - lo2) / (om1 - om2) + _EPS
    return int(math.ceil(vmin)), int(math.floor(vmax))


@njit(cache=True, nogil=True)
def _scan_kernel(uy_lo, uy_hi, ranges, q,
                 e0, e1, a0, a1, b0, b1, ab0, ab1,
                 kind, om, ca, cb, sqa, cap, out):
    """Pruned scan over (y, w, z) with exact x solve; returns emitted count.

    ranges: int64 (5, 2) rows (vy, uw, vw, uz, vz) inclusive outer bounds.
    kind/om/ca/cb/sqa/cap: per-place float data; kind 0 = split, 1 = definite.
    The w and z coordinate pairs are iterated over exact per-place intervals
    computed from the cap remainders, so the loop count stays proportional to
    the number of surviving candidates.  Writing stops at out.shape[0] but
    counting continues (the caller re-runs with a larger buffer on overflow).
    """
    P = kind.shape[0]
    cap_rows = out.shape[0]
    count = 0
    xuv = np.empty((8, 2), dtype=np.int64)
    # per-place scratch: remainders and intervals
    remy = np.empty(P)
    lo_w = np.empty(P)
    hi_w = np.empty(P)
    lo_z = np.empty(P)
    hi_z = np.empty(P)
    flip = om[0] < om[1]
    i1 = 1 if flip else 0     # place with the larger omega
    i2 = 0 if flip else 1

    uy = uy_lo + ((-uy_lo) % q)
    while uy <= uy_hi:
        vy = ranges[0, 0] + ((-ranges[0, 0]) % q)
        while vy <= ranges[0, 1]:
            ok = True
            for j in range(P):
                yj = uy + vy * om[j]
                if kind[j] == 0:
                    syj = 2.0 * ca[j] * yj * yj
                else:
                    syj = abs(ca[j]) * yj * yj
                remy[j] = cap[j] + _EPS - syj
                if remy[j] < 0.0:
                    ok = False
                    break
            if not ok:
                vy += q
                continue
            for j in range(P):
                if kind[j] == 0:
                    rw = math.sqrt(remy[j])
                    bw = 0.5 * (rw / abs(cb[j]) + rw)
                else:
                    bw = math.sqrt(remy[j] / abs(cb[j]))
                lo_w[j] = -bw
                hi_w[j] = bw
            vw_lo, vw_hi = _pair_iter_bounds(lo_w[i1], hi_w[i1],
                                             lo_w[i2], hi_w[i2], om[i1], om[i2])
            vw = vw_lo + ((-vw_lo) % q)
            while vw <= vw_hi:
                ulo = lo_w[0] - vw * om[0]
                uhi = hi_w[0] - vw * om[0]
                u2lo = lo_w[1] - vw * om[1]
                u2hi = hi_w[1] - vw * om[1]
                if u2lo > ulo:
                    ulo = u2lo
                if u2hi < uhi:
                    uhi = u2hi
                uw_lo = int(math.ceil(ulo - _EPS))
                uw_hi = int(math.floor(uhi + _EPS))
                uw = uw_lo + ((-uw_lo) % q)
                while uw <= uw_hi:
                    ok = True
                    for j in range(P):
                        wj = uw + vw * om[j]
                        if kind[j] == 0:
                            rw = math.sqrt(remy[j])
                            # |w - z sqrt(a)| <= rw and |w + z sqrt(a)| <= rw/|b|
                            zlo = (wj - rw) / sqa[j]
                            zhi = (wj + rw) / sqa[j]
                            z2lo = (-wj - rw / abs(cb[j])) / sqa[j]
                            z2hi = (-wj + rw / abs(cb[j])) / sqa[j]
                            if z2lo > zlo:
                                zlo = z2lo
                            if z2hi < zhi:
                                zhi = z2hi
                        else:
                            rz = remy[j] - abs(cb[j]) * wj * wj
                            if rz < 0.0:
                                ok = False
                                break
                            bz = math.sqrt(rz / abs(ca[j] * cb[j]))
                            zlo = -bz
                            zhi = bz
                        if zlo > zhi:
                            ok = False
                            break
                        lo_z[j] = zlo
                        hi_z[j] = zhi
                    if not ok:
                        uw += q
                        continue
                    sw0 = uw * uw + e0 * vw * vw
                    sw1 = 2 * uw * vw + e1 * vw * vw
                    sy0 = uy * uy + e0 * vy * vy
                    sy1 = 2 * uy * vy + e1 * vy * vy
                    vz_lo, vz_hi = _pair_iter_bounds(lo_z[i1], hi_z[i1],
                                                     lo_z[i2], hi_z[i2],
                                                     om[i1], om[i2])
                    vz = vz_lo + ((-vz_lo) % q)
                    while vz <= vz_hi:
                        zlo = lo_z[0] - vz * om[0]
                        zhi = hi_z[0] - vz * om[0]
                        z2lo = lo_z[1] - vz * om[1]
                        z2hi = hi_z[1] - vz * om[1]
                        if z2lo > zlo:
                            zlo = z2lo
                        if z2hi < zhi:
                            zhi = z2hi
                        uz_lo = int(math.ceil(zlo - _EPS))
                        uz_hi = int(math.floor(zhi + _EPS))
                        uz = uz_lo + ((-uz_lo) % q)
                        while uz <= uz_hi:
                            # N = 1 + a y^2 + b w^2 - ab z^2 exactly
                            sz0 = uz * uz + e0 * vz * vz
                            sz1 = 2 * uz * vz + e1 * vz * vz
                            N0 = (1 + a0 * sy0 + e0 * a1 * sy1
                                  + b0 * sw0 + e0 * b1 * sw1
                                  - ab0 * sz0 - e0 * ab1 * sz1)
                            N1 = (a0 * sy1 + a1 * sy0 + e1 * a1 * sy1
                                  + b0 * sw1 + b1 * sw0 + e1 * b1 * sw1
                                  - ab0 * sz1 - ab1 * sz0 - e1 * ab1 * sz1)
                            nx = _solve_x(N0, N1, e0, e1, xuv)
                            for ix in range(nx):
                                ux, vx = xuv[ix, 0], xuv[ix, 1]
                                # PSL classes: {+-alpha} is congruent when
                                # either sign is = 1 mod q
                                uxq = ux % q
                                if (uxq != 1 % q and uxq != (-1) % q) or vx % q != 0:
                                    continue
                                ok = True
                                for j in range(P):
                                    xj = ux + vx * om[j]
                                    yj = uy + vy * om[j]
                                    wj = uw + vw * om[j]
                                    zj = uz + vz * om[j]
                                    if kind[j] == 0:
                                        nj = (2.0 * xj * xj
                                              + 2.0 * ca[j] * yj * yj
                                              + cb[j] * cb[j] * (wj + zj * sqa[j]) ** 2
                                              + (wj - zj * sqa[j]) ** 2)
                                        if nj > cap[j]:
                                            ok = False
                                            break
                                if not ok:
                                    continue
                                if not _first_nonzero_positive(
                                        ux, vx, uy, vy, uw, vw, uz, vz):
                                    continue
                                if count < cap_rows:
                                    out[count, 0] = ux
                                    out[count, 1] = vx
                                    out[count, 2] = uy
                                    out[count, 3] = vy
                                    out[count, 4] = uw
                                    out[count, 5] = vw
                                    out[count, 6] = uz
                                    out[count, 7] = vz
                                count += 1
                            uz += q
                        vz += q
                    uw += q
                vw += q
            vy += q
        uy += q
    return count


def scan_numba(uy_lo, uy_hi, ranges, q, ints, place_data, cap_rows=4096):
    """Run the njit kernel (or its pure-python twin when numba is absent)."""
    e0, e1, a0, a1, b0, b1, ab0, ab1 = ints
    kind, om, ca, cb, sqa, cap = place_data
    while True:
        out = np.empty((cap_rows, 8), dtype=np.int64)
        n = _scan_kernel(np.int64(uy_lo), np.int64(uy_hi),
                         ranges.astype(np.int64), np.int64(q),
                         np.int64(e0), np.int64(e1), np.int64(a0), np.int64(a1),
                         np.int64(b0), np.int64(b1), np.int64(ab0), np.int64(ab1),
                         kind, om, ca, cb, sqa, cap, out)
        if n <= cap_rows:
            return out[:n]
        cap_rows = int(1.5 * n) + 64


def _solve_x_py(N0, N1, e0, e1):
    buf = np.empty((8, 2), dtype=np.int64)
    fn = _solve_x.py_func if NUMBA_AVAILABLE else _solve_x
    n = fn(int(N0), int(N1), int(e0), int(e1), buf)
    return buf[:n]


def scan_numpy(uy_lo, uy_hi, ranges, q, ints, place_data, cap_rows=None):
    """Pure-numpy scan: python loops over (y, w), vectorized z pruning and
    discriminant tests, scalar exact x solve on the survivors."""
    e0, e1, a0, a1, b0, b1, ab0, ab1 = (int(v) for v in ints)
    kind, om, ca, cb, sqa, cap = place_data
    P = len(kind)
    D = e0 if e1 == 0 else 4 * e0 + 1

    def crange(lo, hi, offset=0):
        start = lo + ((offset - lo) % q)
        return np.arange(start, hi + 1, q, dtype=np.int64)

    uzs = crange(ranges[3, 0], ranges[3, 1])
    vzs = crange(ranges[4, 0], ranges[4, 1])
    UZ, VZ = np.meshgrid(uzs, vzs, indexing="ij")
    UZ, VZ = UZ.ravel(), VZ.ravel()
    sz0 = UZ * UZ + e0 * VZ * VZ
    sz1 = 2 * UZ * VZ + e1 * VZ * VZ
    zj = np.empty((P, len(UZ)))
    for j in range(P):
        zj[j] = UZ + VZ * om[j]

    rows = []
    for uy in crange(uy_lo, uy_hi):
        for vy in crange(ranges[0, 0], ranges[0, 1]):
            sy = []
            pruned = False
            for j in range(P):
                yj = uy + vy * om[j]
                syj = (2.0 * ca[j] if kind[j] == 0 else abs(ca[j])) * yj * yj
                if syj > cap[j] + _EPS:
                    pruned = True
                    break
                sy.append((yj, syj))
            if pruned:
                continue
            sy0 = uy * uy + e0 * vy * vy
            sy1 = 2 * uy * vy + e1 * vy * vy
            for uw in crange(ranges[1, 0], ranges[1, 1]):
                for vw in crange(ranges[2, 0], ranges[2, 1]):
                    mask = np.ones(len(UZ), dtype=bool)
                    for j in range(P):
                        yj, syj = sy[j]
                        wj = uw + vw * om[j]
                        if kind[j] == 0:
                            pj = (syj + cb[j] * cb[j] * (wj + zj[j] * sqa[j]) ** 2
                                  + (wj - zj[j] * sqa[j]) ** 2)
                        else:
                            pj = (syj + abs(cb[j]) * wj * wj
                                  + abs(ca[j] * cb[j]) * zj[j] * zj[j])
                        mask &= pj <= cap[j] + _EPS
                        if not mask.any():
                            break
                    if not mask.any():
                        continue
                    idx = np.nonzero(mask)[0]
                    sw0 = uw * uw + e0 * vw * vw
                    sw1 = 2 * uw * vw + e1 * vw * vw
                    N0 = (1 + a0 * sy0 + e0 * a1 * sy1 + b0 * sw0 + e0 * b1 * sw1
                          - ab0 * sz0[idx] - e0 * ab1 * sz1[idx])
                    N1 = (a0 * sy1 + a1 * sy0 + e1 * a1 * sy1
                          + b0 * sw1 + b1 * sw0 + e1 * b1 * sw1
                          - ab0 * sz1[idx] - ab1 * sz0[idx] - e1 * ab1 * sz1[idx])
                    # quick vectorized discriminant screen
                    if e1 == 0:
                        even = N1 % 2 == 0
                        A = N0
                        B = np.where(even, N1 // 2, 0)
                    else:
                        even = np.ones(len(N0), dtype=bool)
                        A = 4 * N0 + 2 * N1
                        B = N1
                    disc = A * A - 4 * D * B * B
                    plaus = even & (A >= 0) & (disc >= 0)
                    r = np.zeros_like(disc)
                    pi = np.nonzero(plaus)[0]
                    r[pi] = np.floor(np.sqrt(disc[pi].astype(np.float64))).astype(np.int64)
                    for k in pi:
                        rr = r[k]
                        while rr * rr > disc[k]:
                            rr -= 1
                        while (rr + 1) * (rr + 1) <= disc[k]:
                            rr += 1
                        if rr * rr != disc[k]:
                            continue
                        i = idx[k]
                        for ux, vx in _solve_x_py(N0[k], N1[k], e0, e1):
                            uxq = ux % q
                            if (uxq != 1 % q and uxq != (-1) % q) or vx % q != 0:
                                continue
                            ok = True
                            for j in range(P):
                                if kind[j] != 0:
                                    continue
                                xj = ux + vx * om[j]
                                yj = sy[j][0]
                                wj = uw + vw * om[j]
                                zjj = zj[j][i]
                                nj = (2.0 * xj * xj + 2.0 * ca[j] * yj * yj
                                      + cb[j] * cb[j] * (wj + zjj * sqa[j]) ** 2
                                      + (wj - zjj * sqa[j]) ** 2)
                                if nj > cap[j]:
                                    ok = False
                                    break
                            if not ok:
                                continue
                            coords = (int(ux), int(vx), int(uy), int(vy),
                                      int(uw), int(vw), int(UZ[i]), int(VZ[i]))
                            first = next((cc for cc in coords if cc != 0), 0)
                            if first <= 0:
                                continue
                            rows.append(coords)
    if rows:
        return np.array(sorted(rows, key=lambda row: _loop_key(row, q)), dtype=np.int64)
    return np.empty((0, 8), dtype=np.int64)


def _loop_key(row, q):
    """Order rows the way the sequential kernel emits them."""
    ux, vx, uy, vy, uw, vw, uz, vz = row
    return (uy, vy, uw, vw, uz, vz, ux, vx)


def active_scan():
    """The kernel selected by the environment."""
    return scan_numba if NUMBA_AVAILABLE else scan_numpy
