"""Slot-discretized linear program for fractional completion time.

Time is cut into equal slots; the variables are per-job volumes per slot,
priced at the slot midpoint divided by the job volume.  Constraints: each job
accumulates its demand, no slot exceeds its capacity, and no job exceeds its
requirement cap within a slot.

The engine is a self-contained dense bounded-variable two-phase simplex
(duals read from the optimal basis).  Because the optimal solution is
piecewise constant between O(n^2) structure-change slots, the full problem is
solved on an adaptively refined slot-block aggregation; every round a
Lagrangian weak-duality bound certifies how far the aggregated optimum can be
from the true one, and refinement stops once that certificate gap vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, JobSet, Schedule, StepFunction


class SimplexError(RuntimeError):
    """The solver hit its pivot or refinement limit."""


class InfeasibleInstanceError(RuntimeError):
    """The demanded volumes do not fit the horizon."""


# ---------------------------------------------------------------------------
# dense bounded-variable two-phase simplex


def dense_simplex(c, A, b, upper, bland: bool = False, stall_switch: int = 60,
                  max_pivots: int = 500_000):
    """min c@x subject to A@x == b (componentwise b >= 0), 0 <= x <= upper.

    Entering variables are priced by the largest reduced cost, switching
    permanently to Bland's smallest-index rule after ``stall_switch``
    consecutive degenerate pivots (or from the start with ``bland=True``),
    which keeps the anti-cycling guarantee.  Returns
    ``(x, row_duals, reduced_costs, pivot_count)``.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, nvar = A.shape
    if np.any(b < 0.0):
        raise ContractError("dense_simplex needs nonnegative right-hand sides")
    ncols = nvar + m
    T = np.empty((m, ncols))
    T[:, :nvar] = A
    T[:, nvar:] = np.eye(m)
    xB = b.copy()
    basis = np.arange(nvar, ncols)
    in_basis = np.zeros(ncols, dtype=bool)
    in_basis[basis] = True
    at_upper = np.zeros(ncols, dtype=bool)
    u = np.concatenate([upper, np.full(m, np.inf)])
    banned = np.zeros(ncols, dtype=bool)
    pivots = 0

    def run(z, use_bland):
        nonlocal T, xB, pivots
        degen = 0
        while True:
            if pivots > max_pivots:
                raise SimplexError("pivot limit exceeded")
            zm = np.where(in_basis | banned, 0.0, z)
            cand_lo = (~at_upper) & (zm < -1e-9)
            cand_up = at_upper & (zm > 1e-9)
            cand = cand_lo | cand_up
            if not cand.any():
                return z
            if use_bland or degen > stall_switch:
                j = int(np.flatnonzero(cand)[0])
            else:
                j = int(np.argmax(np.where(cand, np.abs(zm), -1.0)))
            from_upper = bool(at_upper[j])
            dec = -T[:, j] if from_upper else T[:, j].copy()
            ub = u[basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim0 = np.where(dec > 1e-11,
                                np.maximum(xB, 0.0) / np.where(dec > 1e-11, dec, 1.0),
                                np.inf)
                gap = np.where(np.isfinite(ub), np.maximum(ub - xB, 0.0), np.inf)
                limU = np.where((dec < -1e-11) & np.isfinite(ub),
                                gap / np.where(dec < -1e-11, -dec, 1.0),
                                np.inf)
            dmin = min(float(lim0.min()), float(limU.min()))
            delta = min(dmin, float(u[j]))
            if not np.isfinite(delta):
                raise SimplexError("objective unbounded below")
            degen = degen + 1 if delta <= 1e-13 else 0
            if np.isfinite(u[j]) and u[j] <= dmin:
                xB -= dec * u[j]
                at_upper[j] = not from_upper
                pivots += 1
                continue
            eligible = np.flatnonzero((lim0 <= delta + 1e-13) | (limU <= delta + 1e-13))
            rr = int(eligible[np.argmin(basis[eligible])])
            to_upper = not (lim0[rr] <= delta + 1e-13)
            leaving = int(basis[rr])
            xB -= dec * delta
            enter_val = (u[j] - delta) if from_upper else delta
            piv_row = T[rr] / T[rr, j]
            T[rr] = piv_row
            colv = T[:, j].copy()
            colv[rr] = 0.0
            T -= np.outer(colv, piv_row)
            xB[rr] = enter_val
            if z[j] != 0.0:
                z = z - z[j] * piv_row
            z[j] = 0.0
            basis[rr] = j
            in_basis[leaving] = False
            in_basis[j] = True
            at_upper[j] = False
            at_upper[leaving] = to_upper
            pivots += 1

    c1 = np.zeros(ncols)
    c1[nvar:] = 1.0
    z1 = c1 - c1[basis] @ T
    run(z1, use_bland=bland)
    art_rows = np.flatnonzero(basis >= nvar)
    residual = float(xB[art_rows].sum()) if art_rows.size else 0.0
    if residual > 1e-7 * max(1.0, float(np.abs(b).sum())):
        raise InfeasibleInstanceError(f"no feasible point (phase-1 residual {residual:.3e})")
    banned[nvar:] = True
    u[nvar:] = 0.0
    xB[art_rows] = np.maximum(xB[art_rows], 0.0)
    c2 = np.zeros(ncols)
    c2[:nvar] = c
    z2 = c2 - c2[basis] @ T
    z2 = run(z2, use_bland=bland)
    x = np.where(at_upper[:nvar] & np.isfinite(upper), upper, 0.0)
    mask = basis < nvar
    x[basis[mask]] = xB[mask]
    y = -z2[nvar:]
    return x, y, z2[:nvar].copy(), pivots


# ---------------------------------------------------------------------------
# instance and solution containers


@dataclass(frozen=True)
class LpInstance:
    """Slot LP data: jobs, demanded volumes, horizon and slot width."""

    jobs: JobSet
    targets: np.ndarray
    horizon: float
    slot_width: float
    n_slots: int

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @property
    def n_variables(self) -> int:
        return len(self.jobs) * self.n_slots

    def slot_midpoints(self) -> np.ndarray:
        return (np.arange(1, self.n_slots + 1) - 0.5) * self.slot_width


def build_discretized_lp(jobs: JobSet, targets=None, horizon: float | None = None,
                         slot_width: float | None = None) -> LpInstance:
    """Assemble the slot LP.

    Defaults: demands equal the job volumes, the horizon is n * p_max (large
    enough that an optimal fractional schedule never runs past it), and the
    slot width is horizon / 1024.  The slot width must divide the horizon to
    within 1e-9 relative.
    """
    v = jobs.volumes()
    if targets is None:
        targets = v.copy()
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (len(jobs),):
        raise ContractError("targets must have one entry per job")
    if np.any(targets < 0.0):
        raise ContractError("targets must be nonnegative")
    if horizon is None:
        horizon = len(jobs) * jobs.max_processing_time() if len(jobs) else 1.0
    if horizon <= 0.0:
        raise ContractError("horizon must be positive")
    if slot_width is None:
        slot_width = horizon / 1024.0
    if slot_width <= 0.0:
        raise ContractError("slot width must be positive")
    ratio = horizon / slot_width
    n_slots = int(round(ratio))
    if n_slots < 1 or abs(ratio - n_slots) > 1e-9 * max(1.0, n_slots):
        raise ContractError(f"slot width must divide the horizon ({ratio=})")
    return LpInstance(jobs, targets, float(horizon), float(slot_width), n_slots)


@dataclass(frozen=True)
class LpSolution:
    """Optimal slot volumes with basis duals and a duality certificate.

    ``volumes[j, i]`` is job j's volume in slot i.  ``alpha`` are the demand
    duals from the simplex basis; ``gamma``/``beta`` the per-slot capacity
    and box duals.  ``certificate_gap`` bounds the distance to the true
    optimum (it is the primal objective minus the dual objective).
    """

    volumes: np.ndarray
    objective: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    dual_objective: float
    certificate_gap: float
    block_edges: np.ndarray = field(repr=False, default=None)
    rounds: int = 0
    pivots: int = 0


def _aggregated_solve(inst: LpInstance, edges: np.ndarray, bland: bool):
    """Dense-simplex solve of the LP restricted to block-constant solutions."""
    n = inst.n_jobs
    v = inst.jobs.volumes()
    r = inst.jobs.requirements()
    d = inst.slot_width
    nb = edges.size - 1
    lens = np.diff(edges).astype(float)
    avgmid = 0.5 * (edges[:-1] + edges[1:]) * d
    N = n * nb
    ncols = N + n + nb
    A = np.zeros((n + nb, ncols))
    b = np.zeros(n + nb)
    for j in range(n):
        A[j, j * nb:(j + 1) * nb] = 1.0
        A[j, N + j] = -1.0
        b[j] = inst.targets[j]
    for k in range(nb):
        A[n + k, k:N:nb] = 1.0
        A[n + k, N + n + k] = 1.0
        b[n + k] = d * lens[k]
    cost = np.concatenate([(avgmid[None, :] / v[:, None]).ravel(), np.zeros(n + nb)])
    upper = np.concatenate([
        (r[:, None] * (lens * d)[None, :]).ravel(),
        np.full(n + nb, np.inf),
    ])
    x, y, _, piv = dense_simplex(cost, A, b, upper, bland=bland)
    W = x[:N].reshape(n, nb)
    alpha = np.maximum(y[:n], 0.0)
    objective = float(cost[:N] @ x[:N])
    return W, alpha, objective, piv


def _slot_duals(inst: LpInstance, alpha: np.ndarray):
    """Per-slot capacity/box duals that are optimal for the price ``alpha``.

    Slot by slot, the Lagrangian inner problem is a box-constrained packing
    whose optimal dual is: gamma = gain of the marginal job when the slot is
    full (0 otherwise), beta_j = excess gain above gamma.  Returns
    (gamma, beta, per-slot best gain * width).
    """
    n = inst.n_jobs
    v = inst.jobs.volumes()
    r = inst.jobs.requirements()
    mids = inst.slot_midpoints()
    gains = alpha[:, None] - mids[None, :] / v[:, None]          # (n, I)
    order = np.argsort(-gains, axis=0, kind="stable")
    g_sorted = np.take_along_axis(gains, order, axis=0)
    r_sorted = np.take_along_axis(np.broadcast_to(r[:, None], gains.shape), order, axis=0)
    used_before = np.vstack([np.zeros(inst.n_slots), np.cumsum(r_sorted, axis=0)[:-1]])
    take = np.clip(1.0 - used_before, 0.0, r_sorted)
    take = np.where(g_sorted > 0.0, take, 0.0)
    slot_gain = (take * g_sorted).sum(axis=0) * inst.slot_width
    # marginal job: first positive-gain row at which the capacity is used up
    filled = (used_before + r_sorted >= 1.0 - 1e-12) & (g_sorted > 0.0)
    gamma = np.zeros(inst.n_slots)
    any_filled = filled.any(axis=0)
    first = np.argmax(filled, axis=0)
    cols = np.flatnonzero(any_filled)
    gamma[cols] = np.maximum(g_sorted[first[cols], cols], 0.0)
    beta = np.maximum(gains - gamma[None, :], 0.0)
    return gamma, beta, slot_gain


def _structure_edges(inst: LpInstance, alpha: np.ndarray) -> np.ndarray:
    """Slot indices where the packing structure of ``alpha`` can change."""
    v = inst.jobs.volumes()
    times = [alpha * v]
    n = v.size
    for j in range(n):
        for k in range(j + 1, n):
            ds = 1.0 / v[j] - 1.0 / v[k]
            if ds != 0.0:
                t = (alpha[j] - alpha[k]) / ds
                if 0.0 < t:
                    times.append(np.array([t]))
    t = np.concatenate(times)
    t = t[(t > 0.0) & (t < inst.horizon)]
    slots = np.unique((t / inst.slot_width).astype(int))
    return np.unique(np.concatenate([slots, slots + 1]))


def solve_lp(inst: LpInstance, certificate_tol: float = 1e-9,
             max_rounds: int = 64, bland: bool = False) -> LpSolution:
    """Solve the slot LP to certified optimality.

    Raises InfeasibleInstanceError when the demands exceed the horizon
    capacity and SimplexError when refinement or pivot limits are hit.
    """
    n = inst.n_jobs
    I = inst.n_slots
    if n == 0:
        return LpSolution(np.zeros((0, I)), 0.0, np.zeros(0), np.zeros((0, I)),
                          np.zeros(I), 0.0, 0.0, np.array([0, I]), 0, 0)
    v = inst.jobs.volumes()
    r = inst.jobs.requirements()
    total_cap = inst.horizon
    if inst.targets.sum() > total_cap * (1.0 + 1e-12):
        raise InfeasibleInstanceError(
            f"total demand {inst.targets.sum():.6g} exceeds horizon capacity {total_cap:.6g}"
        )
    bad = inst.targets > r * total_cap * (1.0 + 1e-12)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise InfeasibleInstanceError(
            f"job {j} demands {inst.targets[j]:.6g} but can absorb at most "
            f"{r[j] * total_cap:.6g} before the horizon"
        )

    nb0 = int(min(I, max(16, 4 * n * n)))
    edges = np.unique(np.round(np.linspace(0, I, nb0 + 1)).astype(int))
    total_pivots = 0
    for rounds in range(1, max_rounds + 1):
        W, alpha, objective, piv = _aggregated_solve(inst, edges, bland)
        total_pivots += piv
        gamma, beta, slot_gain = _slot_duals(inst, alpha)
        dual_obj = float(alpha @ inst.targets - slot_gain.sum())
        gap = objective - dual_obj
        if gap <= certificate_tol * max(1.0, abs(objective)):
            lens = np.diff(edges).astype(float)
            volumes = np.repeat(W / lens[None, :], np.diff(edges), axis=1)
            dual_obj_report = float(
                alpha @ inst.targets
                - inst.slot_width * gamma.sum()
                - inst.slot_width * float((r[:, None] * beta).sum())
            )
            return LpSolution(volumes, objective, alpha, beta, gamma,
                              dual_obj_report, float(objective - dual_obj_report),
                              edges.copy(), rounds, total_pivots)
        new_edges = set(edges.tolist())
        new_edges.update(int(s) for s in _structure_edges(inst, alpha) if 0 < s < I)
        gains = alpha[:, None] - inst.slot_midpoints()[None, :] / v[:, None]
        for k in range(edges.size - 1):
            a, b_ = int(edges[k]), int(edges[k + 1])
            if b_ - a <= 1:
                continue
            ga, gb = gains[:, a], gains[:, b_ - 1]
            if not (np.array_equal(np.argsort(-ga, kind="stable"),
                                   np.argsort(-gb, kind="stable"))
                    and np.array_equal(ga > 0, gb > 0)):
                new_edges.add((a + b_) // 2)
        if len(new_edges) == edges.size:
            widths = np.diff(edges)
            k = int(np.argmax(widths))
            if widths[k] > 1:
                new_edges.add(int(edges[k] + widths[k] // 2))
            else:
                raise SimplexError(f"certificate gap {gap:.3e} at full resolution")
        edges = np.array(sorted(new_edges), dtype=int)
    raise SimplexError(f"block refinement did not converge (gap {gap:.3e})")


def lp_schedule(inst: LpInstance, sol: LpSolution) -> Schedule:
    """Realize slot volumes as a schedule with uniform rates inside slots."""
    if sol.volumes.shape != (inst.n_jobs, inst.n_slots):
        raise ContractError("solution shape does not match the instance")
    grid = np.arange(inst.n_slots + 1) * inst.slot_width
    rates = sol.volumes / inst.slot_width
    return Schedule(StepFunction(grid, rates[j]) for j in range(inst.n_jobs))


def dump_lp(inst: LpInstance) -> str:
    """Fixed-order plain-text dump: objective row, then constraint rows."""
    fmt = lambda x: format(float(x), ".17g")
    v = inst.jobs.volumes()
    r = inst.jobs.requirements()
    mids = inst.slot_midpoints()
    lines = []
    coeffs = " ".join(fmt(mids[i] / v[j]) for j in range(inst.n_jobs) for i in range(inst.n_slots))
    lines.append(f"min {coeffs}".rstrip())
    for j in range(inst.n_jobs):
        lines.append(f"demand {j} >= {fmt(inst.targets[j])}")
    for i in range(inst.n_slots):
        lines.append(f"capacity {i} <= {fmt(inst.slot_width)}")
    for j in range(inst.n_jobs):
        for i in range(inst.n_slots):
            lines.append(f"box {j} {i} <= {fmt(r[j] * inst.slot_width)}")
    return "\n".join(lines) + "\n"
