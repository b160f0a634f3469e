"""Numeric kernels for priority-line schedules.

The hot path of the alpha fixed-point solver evaluates scheduled volumes for
thousands of candidate alpha vectors, so these routines are written as plain
loops and JIT-compiled with numba when it is available.  Without numba the
same functions run under CPython, just slower.

Both kernels share the interval sweep: candidate breakpoints are the zeros
``alpha_j * v_j`` of the priority lines plus every pairwise line crossing at
positive time.  Inside each interval the priority order is constant, so jobs
can be packed greedily by descending line height (ties broken by larger
volume, which only matters for exactly equal volumes).
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    NUMBA = True
except ImportError:  # pragma: no cover
    NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        return deco


@njit(cache=True)
def line_volumes(v, r, alpha):
    """Scheduled volume per job for the line schedule of ``alpha``."""
    n = v.size
    maxpts = 1 + n + n * (n - 1) // 2
    pts = np.empty(maxpts)
    cnt = 0
    pts[cnt] = 0.0
    cnt += 1
    for j in range(n):
        if alpha[j] > 0.0:
            pts[cnt] = alpha[j] * v[j]
            cnt += 1
    for j in range(n):
        for k in range(j + 1, n):
            ds = 1.0 / v[j] - 1.0 / v[k]
            if ds != 0.0:
                t = (alpha[j] - alpha[k]) / ds
                if t > 0.0:
                    pts[cnt] = t
                    cnt += 1
    g = np.sort(pts[:cnt])
    vols = np.zeros(n)
    d = np.empty(n)
    order = np.empty(n, np.int64)
    for i in range(cnt - 1):
        t0 = g[i]
        t1 = g[i + 1]
        w = t1 - t0
        if w <= 0.0:
            continue
        m = 0.5 * (t0 + t1)
        for j in range(n):
            d[j] = alpha[j] - m / v[j]
            order[j] = j
        for j in range(1, n):
            key = order[j]
            kd = d[key]
            kv = v[key]
            l = j - 1
            while l >= 0 and (d[order[l]] < kd or (d[order[l]] == kd and v[order[l]] < kv)):
                order[l + 1] = order[l]
                l -= 1
            order[l + 1] = key
        rem = 1.0
        for jj in range(n):
            q = order[jj]
            if d[q] <= 0.0 or rem <= 0.0:
                break
            take = r[q] if r[q] < rem else rem
            rem -= take
            vols[q] += take * w
    return vols


@njit(cache=True)
def line_structure(v, r, alpha):
    """Full interval structure of the line schedule of ``alpha``.

    Returns ``(grid, rates, vols, jac)`` where ``grid`` is the sorted
    breakpoint vector, ``rates[j, i]`` the constant rate of job j on interval
    i, ``vols`` the scheduled volumes, and ``jac`` the exact Jacobian
    d vols / d alpha.  The Jacobian is exact because, for a fixed priority
    structure, rates are constant and every breakpoint is affine in alpha:
    a zero of line a moves with velocity v_a, a crossing of lines a and b
    with velocity +/- v_a v_b / (v_b - v_a).
    """
    n = v.size
    maxpts = 1 + n + n * (n - 1) // 2
    pts = np.empty(maxpts)
    pa = np.empty(maxpts, np.int64)
    pb = np.empty(maxpts, np.int64)
    cnt = 0
    pts[cnt] = 0.0
    pa[cnt] = -1
    pb[cnt] = -1
    cnt += 1
    for j in range(n):
        if alpha[j] > 0.0:
            pts[cnt] = alpha[j] * v[j]
            pa[cnt] = j
            pb[cnt] = -1
            cnt += 1
    for j in range(n):
        for k in range(j + 1, n):
            ds = 1.0 / v[j] - 1.0 / v[k]
            if ds != 0.0:
                t = (alpha[j] - alpha[k]) / ds
                if t > 0.0:
                    pts[cnt] = t
                    pa[cnt] = j
                    pb[cnt] = k
                    cnt += 1
    idx = np.argsort(pts[:cnt])
    g = pts[:cnt][idx]
    ga = pa[:cnt][idx]
    gb = pb[:cnt][idx]
    rates = np.zeros((n, cnt - 1 if cnt > 1 else 0))
    vols = np.zeros(n)
    d = np.empty(n)
    order = np.empty(n, np.int64)
    for i in range(cnt - 1):
        t0 = g[i]
        t1 = g[i + 1]
        w = t1 - t0
        if w <= 0.0:
            continue
        m = 0.5 * (t0 + t1)
        for j in range(n):
            d[j] = alpha[j] - m / v[j]
            order[j] = j
        for j in range(1, n):
            key = order[j]
            kd = d[key]
            kv = v[key]
            l = j - 1
            while l >= 0 and (d[order[l]] < kd or (d[order[l]] == kd and v[order[l]] < kv)):
                order[l + 1] = order[l]
                l -= 1
            order[l + 1] = key
        rem = 1.0
        for jj in range(n):
            q = order[jj]
            if d[q] <= 0.0 or rem <= 0.0:
                break
            take = r[q] if r[q] < rem else rem
            rem -= take
            rates[q, i] = take
            vols[q] += take * w
    jac = np.zeros((n, n))
    for p in range(cnt):
        a = ga[p]
        if a < 0:
            continue
        b = gb[p]
        for j in range(n):
            before = rates[j, p - 1] if p - 1 >= 0 and rates.shape[1] > 0 else 0.0
            after = rates[j, p] if p < cnt - 1 else 0.0
            diff = before - after
            if diff == 0.0:
                continue
            if b < 0:
                jac[j, a] += diff * v[a]
            else:
                s = v[a] * v[b] / (v[b] - v[a])
                jac[j, a] += diff * s
                jac[j, b] -= diff * s
    return g, rates, vols, jac


def warm_up() -> None:
    """Trigger JIT compilation once (a no-op without numba)."""
    v = np.array([1.0, 2.0])
    r = np.array([0.5, 0.5])
    a = np.array([1.0, 1.0])
    line_volumes(v, r, a)
    line_structure(v, r, a)
