"""Priority-line schedules and their continuous primal-dual structure.

Every job gets a priority line ``d_j(t) = alpha_j - t / v_j``.  At each
instant, jobs whose line is above zero are packed greedily in descending line
height; the dual prices ``gamma`` (capacity) and ``beta_j`` (requirement cap)
fall out of the same construction.  ``solve_alpha`` finds intercepts under
which every job schedules exactly a target volume, which makes the resulting
schedule optimal for the fractional completion-time objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel
from .core import (
    ContractError,
    DEFAULT_TOL,
    Job,
    JobSet,
    PiecewiseLinear,
    Schedule,
    StepFunction,
)


class DegenerateVolumesError(ContractError):
    """Line schedules need pairwise distinct volumes (parallel lines tie)."""


class ConvergenceError(RuntimeError):
    """solve_alpha ran out of iterations; carries the last volume residual."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"volume residual {residual:.3e} after {iterations} iterations"
        )


def dual_line(job: Job, alpha_j: float, t: float) -> float:
    """Priority of ``job`` at time ``t`` under intercept ``alpha_j``."""
    return alpha_j - t / job.volume


@dataclass(frozen=True)
class LineSchedule:
    """Primal rates plus the dual prices built from one alpha vector.

    ``grid`` holds every pairwise line crossing at positive time and every
    line zero; rates, ``gamma`` and ``beta`` are affine within each grid
    interval.  ``scheduled_volumes`` are the exact per-job integrals of the
    rates (these equal the demand vector only when alpha solves for it).
    """

    schedule: Schedule
    alpha: np.ndarray
    beta: tuple[PiecewiseLinear, ...]
    gamma: PiecewiseLinear
    scheduled_volumes: np.ndarray
    grid: np.ndarray
    job_volumes: np.ndarray


@dataclass(frozen=True)
class DualityQuantities:
    """The four objective pieces of a line schedule's primal-dual pair.

    ``volume_payoff`` - ``requirement_penalty`` - ``capacity_penalty`` is the
    dual objective; valid line schedules satisfy
    volume_payoff == primal_cost + requirement_penalty + capacity_penalty
    and primal_cost == requirement_penalty + capacity_penalty.
    """

    primal_cost: float
    volume_payoff: float
    requirement_penalty: float
    capacity_penalty: float

    @property
    def dual_objective(self) -> float:
        return self.volume_payoff - self.requirement_penalty - self.capacity_penalty


@dataclass(frozen=True)
class SlacknessReport:
    """Maximum absolute violation of each complementary-slackness family."""

    volume: float        # alpha_j * (vbar_j - integral R_j)
    requirement: float   # beta_j(t) * (r_j - R_j(t))
    capacity: float      # gamma(t) * (1 - sum_j R_j(t))
    rate: float          # R_j(t) * (d_j(t) - beta_j(t) - gamma(t))
    dual_feasibility: float  # max(0, d_j(t) - beta_j(t) - gamma(t))

    def max_violation(self) -> float:
        return max(self.volume, self.requirement, self.capacity, self.rate,
                   self.dual_feasibility)


def _check_inputs(jobs: JobSet, alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not jobs.non_degenerate():
        raise DegenerateVolumesError(
            "equal job volumes; use split_volume_ties() before building line schedules"
        )
    a = np.asarray(alpha, dtype=float)
    if a.shape != (len(jobs),):
        raise ContractError(f"alpha must have length {len(jobs)}")
    if np.any(a < 0.0) or not np.all(np.isfinite(a)):
        raise ContractError("alpha entries must be finite and nonnegative")
    return jobs.volumes(), jobs.requirements(), a


def build_line_schedule(jobs: JobSet, alpha) -> LineSchedule:
    """Construct the line schedule of ``alpha`` with its dual prices.

    The capacity price gamma follows the lowest scheduled priority line on
    intervals where the resource is exhausted and is zero elsewhere (the
    only choice under which gamma-slackness and the duality identities hold
    when requirement caps leave the resource unsaturated);
    ``beta_j = max(0, d_j - gamma)``.
    """
    v, r, a = _check_inputs(jobs, alpha)
    n = v.size
    if n == 0:
        return LineSchedule(Schedule.empty(0), a, (), PiecewiseLinear.zero(),
                            np.zeros(0), np.array([0.0]), np.zeros(0))
    grid, rates, vols, _ = _kernel.line_structure(v, r, a)
    grid = np.asarray(grid)
    # collapse duplicated grid points for the stored interval structure
    keep = np.concatenate([[True], np.diff(grid) > 0.0])
    grid = grid[keep]
    rates = rates[:, keep[1:]] if rates.shape[1] else rates
    m = grid.size - 1
    assignments = [StepFunction(grid, rates[j]) if m else StepFunction.zero() for j in range(n)]

    gamma_start = np.zeros(m)
    gamma_slope = np.zeros(m)
    beta_start = np.zeros((n, m))
    beta_slope = np.zeros((n, m))
    for i in range(m):
        t0, t1 = grid[i], grid[i + 1]
        mid = 0.5 * (t0 + t1)
        d_mid = a - mid / v
        col = rates[:, i]
        saturated = col.sum() >= 1.0 - 1e-12
        if saturated:
            scheduled = np.flatnonzero(col > 0.0)
            k = scheduled[np.argmin(d_mid[scheduled])]
            g0, gs = a[k] - t0 / v[k], -1.0 / v[k]
        else:
            g0, gs = 0.0, 0.0
        gamma_start[i], gamma_slope[i] = g0, gs
        for j in range(n):
            if d_mid[j] - (g0 + gs * (mid - t0)) > 0.0:
                beta_start[j, i] = (a[j] - t0 / v[j]) - g0
                beta_slope[j, i] = -1.0 / v[j] - gs
    gamma = PiecewiseLinear(grid, gamma_start, gamma_slope) if m else PiecewiseLinear.zero()
    beta = tuple(
        PiecewiseLinear(grid, beta_start[j], beta_slope[j]) if m else PiecewiseLinear.zero()
        for j in range(n)
    )
    return LineSchedule(Schedule(assignments), a, beta, gamma, vols, grid, v)


def scheduled_volumes(jobs: JobSet, alpha) -> np.ndarray:
    """Per-job volume the line schedule of ``alpha`` actually schedules."""
    v, r, a = _check_inputs(jobs, alpha)
    if v.size == 0:
        return np.zeros(0)
    return _kernel.line_volumes(v, r, a)


def split_volume_ties(jobs: JobSet, rel: float = 1e-12) -> JobSet:
    """Explicit tie-break helper: nudge equal volumes apart.

    The k-th member of each tie group is scaled by (1 + rel * k).  Never
    applied silently; callers opt in before building line schedules.
    """
    seen: dict[float, int] = {}
    out = []
    for job in jobs:
        k = seen.get(job.volume, 0)
        seen[job.volume] = k + 1
        out.append(Job(job.volume * (1.0 + rel * k), job.requirement))
    return JobSet(out)


def solve_alpha(jobs: JobSet, targets=None, vol_tol: float = 1e-8,
                max_iters: int = 200) -> np.ndarray:
    """Intercepts under which job j schedules exactly ``targets[j]`` volume.

    Starts from alpha = 0 and alternates (a) a monotone sweep that raises
    each intercept in descending-target order until that job alone meets its
    target (bracketed bisection on the nondecreasing per-job volume map) and
    (b) Newton steps using the exact piecewise-affine Jacobian of the volume
    map, accepted only when they shrink the max residual.  Stops when
    max_j |vol_j - targets_j| <= vol_tol; raises ConvergenceError otherwise.
    """
    v = jobs.volumes()
    r = jobs.requirements()
    if targets is None:
        targets = v.copy()
    tau = np.asarray(targets, dtype=float)
    if tau.shape != v.shape:
        raise ContractError("targets must have one entry per job")
    if np.any(tau <= 0.0):
        raise ContractError("targets must be positive")
    if not jobs.non_degenerate():
        raise DegenerateVolumesError(
            "equal job volumes; use split_volume_ties() before solve_alpha"
        )
    n = v.size
    if n == 0:
        return np.zeros(0)

    alpha = np.zeros(n)
    order = np.argsort(-tau, kind="stable")
    inner_tol = 0.125 * vol_tol
    residual = np.inf
    for iteration in range(max_iters):
        _sweep(v, r, alpha, tau, order, inner_tol)
        F = _kernel.line_volumes(v, r, alpha) - tau
        residual = float(np.max(np.abs(F)))
        if residual <= vol_tol:
            return alpha
        alpha, residual = _newton(v, r, alpha, tau, residual)
        if residual <= vol_tol:
            return alpha
    raise ConvergenceError(residual, max_iters)


def _sweep(v, r, alpha, tau, order, inner_tol) -> None:
    """One coordinate sweep: raise each alpha_j so job j meets its target."""

    def vol_at(j, aj):
        old = alpha[j]
        alpha[j] = aj
        out = _kernel.line_volumes(v, r, alpha)[j]
        alpha[j] = old
        return out

    for j in order:
        target = tau[j]
        cur = vol_at(j, alpha[j])
        if abs(cur - target) <= inner_tol:
            continue
        if cur > target:
            lo, hi = 0.0, alpha[j]
        else:
            lo = alpha[j]
            step = max(0.5, 0.25 * (1.0 + alpha[j]))
            hi = lo + step
            while vol_at(j, hi) < target:
                step *= 2.0
                hi = lo + step
                if not np.isfinite(hi):  # pragma: no cover - volumes grow without bound
                    raise ConvergenceError(float("inf"), 0)
        while True:
            mid = 0.5 * (lo + hi)
            if not (lo < mid < hi):
                break
            if vol_at(j, mid) >= target:
                hi = mid
            else:
                lo = mid
        alpha[j] = hi


def _newton(v, r, alpha, tau, residual):
    """Damped Newton steps on the volume map; keeps alpha >= 0."""
    for _ in range(12):
        _, _, vols, jac = _kernel.line_structure(v, r, alpha)
        F = vols - tau
        cur = float(np.max(np.abs(F)))
        if cur <= residual:
            residual = cur
        try:
            delta = np.linalg.lstsq(jac, -F, rcond=None)[0]
        except np.linalg.LinAlgError:  # pragma: no cover
            break
        step = 1.0
        accepted = False
        for _ in range(30):
            cand = np.maximum(alpha + step * delta, 0.0)
            fc = float(np.max(np.abs(_kernel.line_volumes(v, r, cand) - tau)))
            if fc < (1.0 - 1e-3 * step) * cur:
                alpha[:] = cand
                residual = fc
                accepted = True
                break
            step *= 0.5
        if not accepted or residual == 0.0:
            break
    return alpha, residual


def duality_quantities(ls: LineSchedule, jobs: JobSet) -> DualityQuantities:
    """Exact segment-wise integrals of the four objective pieces."""
    v = jobs.volumes()
    r = jobs.requirements()
    primal = sum(
        a.first_moment() / vj for a, vj in zip(ls.schedule.assignments, v)
    )
    payoff = float(np.dot(ls.alpha, ls.scheduled_volumes))
    req = sum(rj * b.integral() for rj, b in zip(r, ls.beta))
    cap = ls.gamma.integral()
    return DualityQuantities(float(primal), payoff, float(req), float(cap))


def check_slackness(ls: LineSchedule, jobs: JobSet, tol: float = DEFAULT_TOL) -> SlacknessReport:
    """Evaluate all four slackness families plus dual feasibility.

    Sampled at every grid-interval midpoint and at +/- eps around every
    breakpoint; exact grid integrals feed the volume condition.
    """
    v = jobs.volumes()
    r = jobs.requirements()
    n = v.size
    vol_viol = 0.0
    for j in range(n):
        got = ls.schedule.assignments[j].integral()
        vol_viol = max(vol_viol, abs(ls.alpha[j] * (ls.scheduled_volumes[j] - got)))
    grid = ls.grid
    if grid.size < 2:
        return SlacknessReport(vol_viol, 0.0, 0.0, 0.0, 0.0)
    eps = 1e-7 * grid[-1]
    samples = np.concatenate([
        0.5 * (grid[:-1] + grid[1:]),
        grid[1:] - eps,
        grid[:-1] + eps,
        [grid[-1] + eps],
    ])
    samples = samples[samples >= 0.0]
    req_viol = cap_viol = rate_viol = feas_viol = 0.0
    usage = ls.schedule.total_usage()
    gamma_t = ls.gamma(samples)
    used_t = usage(samples)
    cap_viol = float(np.max(np.abs(gamma_t * (1.0 - used_t)))) if samples.size else 0.0
    for j in range(n):
        rate_t = ls.schedule.assignments[j](samples)
        beta_t = ls.beta[j](samples)
        d_t = ls.alpha[j] - samples / v[j]
        req_viol = max(req_viol, float(np.max(np.abs(beta_t * (r[j] - rate_t)))))
        rate_viol = max(rate_viol, float(np.max(np.abs(rate_t * (d_t - beta_t - gamma_t)))))
        feas_viol = max(feas_viol, float(np.max(d_t - beta_t - gamma_t, initial=0.0)))
    return SlacknessReport(vol_viol, req_viol, cap_viol, rate_viol, feas_viol)


def cost_rate(ls: LineSchedule, t: float) -> float:
    """Instantaneous fractional-cost accrual: sum_j R_j(t) / v_j."""
    return float(
        sum(a(t) / vj for a, vj in zip(ls.schedule.assignments, ls.job_volumes))
    )


def cost_rates_on_grid(ls: LineSchedule) -> np.ndarray:
    """Cost rate at every grid-interval midpoint, in time order."""
    if ls.grid.size < 2:
        return np.zeros(0)
    mids = 0.5 * (ls.grid[:-1] + ls.grid[1:])
    rates = np.vstack([a(mids) for a in ls.schedule.assignments])
    return (rates / ls.job_volumes[:, None]).sum(axis=0)
