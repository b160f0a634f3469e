"""Total completion time: greedy packing, lower bounds, and line-schedule
based algorithms.

``greedy`` packs jobs in ascending volume as early and as fully as possible.
``ls_exact`` solves for intercepts whose line schedule meets every volume
exactly (optimal fractional completion time).  ``lsapprox`` is the
polynomial-time variant: it reserves a small resource share for jobs that are
cheap to finish, solves the slot LP for the remaining ("long-heavy") jobs,
rebuilds a line schedule from the LP duals, and stretches/squashes it to fit.
``best_schedule`` returns the better of greedy and the line-schedule branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ContractError,
    JobSet,
    Schedule,
    StepFunction,
    total_completion_time,
)
from .linesched import (
    ConvergenceError,
    DegenerateVolumesError,
    DualityQuantities,
    build_line_schedule,
    duality_quantities,
    solve_alpha,
)
from . import lp as lpmod


def greedy(jobs: JobSet) -> Schedule:
    """Ascending-volume packing, each job as much and as early as possible.

    Ties are broken by original index.  Job j runs at
    min(requirement, remaining capacity) until its volume completes; the
    completion instant is computed exactly on the usage grid.
    """
    n = len(jobs)
    order = sorted(range(n), key=lambda j: (jobs[j].volume, j))
    assignments: list[StepFunction | None] = [None] * n
    edges = np.array([0.0])
    usage = np.array([])  # one level per interval, 0 after edges[-1]
    for j in order:
        v, r = jobs[j].volume, jobs[j].requirement
        caps = np.minimum(r, np.maximum(1.0 - usage, 0.0))
        widths = np.diff(edges)
        acc = 0.0
        t_done = None
        rates = []
        for k in range(widths.size):
            if acc >= v:
                t_done = float(edges[k])
                break
            gain = caps[k] * widths[k]
            if acc + gain >= v and caps[k] > 0.0:
                t_done = float(edges[k] + (v - acc) / caps[k])
                rates.append(caps[k])
                break
            rates.append(caps[k])
            acc += gain
        if t_done is None:
            t_done = float(edges[-1] + (v - acc) / r)
            rates.append(r)
        grid = np.append(edges[: len(rates)], t_done)
        assignments[j] = StepFunction(grid, rates)
        # fold into the usage profile
        new_edges = np.unique(np.concatenate([edges, grid]))
        mids = 0.5 * (new_edges[:-1] + new_edges[1:])
        if usage.size:
            old_idx = np.searchsorted(edges, mids, side="right") - 1
            safe = np.clip(old_idx, 0, usage.size - 1)
            old_val = np.where(old_idx < usage.size, usage[safe], 0.0)
        else:
            old_val = np.zeros(mids.size)
        usage = old_val + assignments[j](mids)
        edges = new_edges
        # drop zero tail to keep the profile compact
        while usage.size and usage[-1] == 0.0:
            usage = usage[:-1]
            edges = edges[:-1]
        if not usage.size:
            edges = np.array([0.0])
    return Schedule(assignments)


@dataclass(frozen=True)
class Bounds:
    """Certified lower bounds on the optimal total completion time.

    ``squashed_area``: completion total of the ascending-volume sequence run
    at full resource (valid because raising every requirement to 1 only
    helps).  ``total_length``: sum of processing times (valid because giving
    every job its own resource only helps).
    ``fractional_plus_half_length``: a fractional optimum plus half the
    length bound, when a fractional optimum is supplied.
    """

    squashed_area: float
    total_length: float
    fractional_plus_half_length: float | None = None

    @property
    def best(self) -> float:
        cands = [self.squashed_area, self.total_length]
        if self.fractional_plus_half_length is not None:
            cands.append(self.fractional_plus_half_length)
        return max(cands)


def lower_bounds(jobs: JobSet, fractional_opt: float | None = None) -> Bounds:
    vols = np.sort(jobs.volumes())
    squashed = float(np.cumsum(vols).sum()) if vols.size else 0.0
    length = float(jobs.processing_times().sum()) if len(jobs) else 0.0
    lb3 = fractional_opt + 0.5 * length if fractional_opt is not None else None
    return Bounds(squashed, length, lb3)


def ls_exact(jobs: JobSet, vol_tol: float = 1e-8) -> tuple[Schedule, np.ndarray, DualityQuantities]:
    """Line schedule meeting every volume exactly, with its duals.

    The returned schedule attains the optimal fractional completion time;
    its total completion time is at most twice that.
    """
    alpha = solve_alpha(jobs, targets=None, vol_tol=vol_tol)
    ls = build_line_schedule(jobs, alpha)
    return ls.schedule, alpha, duality_quantities(ls, jobs)


@dataclass(frozen=True)
class Subdivision:
    """Partition used by the approximation pipeline.

    light: requirement at most mu/n (cheap to park on a resource sliver).
    short_heavy: processing time at most (mu/n)^2 * p_max but not light.
    long_heavy: everything else (these drive the objective).
    Sets hold 0-based job ids.
    """

    light: frozenset[int]
    short_heavy: frozenset[int]
    long_heavy: frozenset[int]
    mu: float


def subdivide(jobs: JobSet, mu: float) -> Subdivision:
    if not (0.0 < mu < 1.0):
        raise ContractError("mu must lie in (0, 1)")
    n = len(jobs)
    p_max = jobs.max_processing_time()
    light, short_heavy, long_heavy = set(), set(), set()
    for idx, job in enumerate(jobs):
        if job.requirement <= mu / n:
            light.add(idx)
        elif job.processing_time <= (mu / n) ** 2 * p_max:
            short_heavy.add(idx)
        else:
            long_heavy.add(idx)
    return Subdivision(frozenset(light), frozenset(short_heavy),
                       frozenset(long_heavy), mu)


@dataclass(frozen=True)
class LsApproxParams:
    """Accuracy knobs for the approximation pipeline.

    ``mu`` is kappa * epsilon rounded down so that 1/mu is an integer (and
    at least 2, keeping mu < 1).  ``slot_width`` and ``horizon`` override the
    LP discretization; by default the horizon is n * p_max and the width
    horizon / 1024.
    """

    epsilon: float
    kappa: float = 0.05
    slot_width: float | None = None
    horizon: float | None = None

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ContractError("epsilon must be positive")
        if self.kappa <= 0.0:
            raise ContractError("kappa must be positive")

    @property
    def mu(self) -> float:
        return 1.0 / max(2, math.ceil(1.0 / (self.kappa * self.epsilon)))


class PipelineError(RuntimeError):
    """A stage of the approximation pipeline could not proceed."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


@dataclass(frozen=True)
class LsApproxInfo:
    """Effective parameters and pipeline measurements for one run."""

    mu: float
    subdivision: Subdivision
    horizon: float
    slot_width: float
    guarantee_slot_width: float
    scale_factor: float | None
    lp_rounds: int
    lp_pivots: int


def lsapprox_report(jobs: JobSet, params: LsApproxParams) -> tuple[Schedule, LsApproxInfo]:
    """Run the approximation pipeline, returning the schedule and its report."""
    mu = params.mu
    n = len(jobs)
    if n == 0:
        info = LsApproxInfo(mu, Subdivision(frozenset(), frozenset(), frozenset(), mu),
                            0.0, 0.0, 0.0, None, 0, 0)
        return Schedule.empty(0), info
    sub = subdivide(jobs, mu)
    p_max = jobs.max_processing_time()
    horizon = params.horizon if params.horizon is not None else n * p_max
    slot_width = params.slot_width if params.slot_width is not None else horizon / 1024.0
    guarantee = horizon * (mu / n) ** 6
    assignments: list[StepFunction | None] = [None] * n
    scale = None
    lp_rounds = lp_pivots = 0
    lh = sorted(sub.long_heavy)
    if lh:
        lh_jobs = JobSet(jobs[i] for i in lh)
        if not lh_jobs.non_degenerate():
            raise PipelineError(
                "line-schedule",
                "long-heavy volumes tie; apply split_volume_ties() to the instance first",
            )
        try:
            inst = lpmod.build_discretized_lp(lh_jobs, horizon=horizon, slot_width=slot_width)
            sol = lpmod.solve_lp(inst)
        except (lpmod.InfeasibleInstanceError, lpmod.SimplexError, ContractError) as exc:
            raise PipelineError("lp", str(exc)) from exc
        lp_rounds, lp_pivots = sol.rounds, sol.pivots
        try:
            ls = build_line_schedule(lh_jobs, sol.alpha)
        except ContractError as exc:
            raise PipelineError("line-schedule", str(exc)) from exc
        vbar = ls.scheduled_volumes
        vols = lh_jobs.volumes()
        if np.any(vbar <= 1e-15 * vols):
            raise PipelineError("scale", "a long-heavy job received no volume from the LP intercepts")
        scale = float(np.max(vols / vbar))
        squash = 1.0 - mu
        for pos, idx in enumerate(lh):
            stretched = ls.schedule.assignments[pos].scale_time(scale)
            assignments[idx] = stretched.scale_values(squash).scale_time(1.0 / squash)
    for idx in sorted(sub.light | sub.short_heavy):
        job = jobs[idx]
        rate = min(mu / n, job.requirement)
        assignments[idx] = StepFunction.constant(rate, job.volume / rate)
    info = LsApproxInfo(mu, sub, horizon, slot_width, guarantee, scale,
                        lp_rounds, lp_pivots)
    return Schedule(assignments), info


def lsapprox(jobs: JobSet, params: LsApproxParams) -> Schedule:
    """Approximation-pipeline schedule; see lsapprox_report for diagnostics."""
    sched, _ = lsapprox_report(jobs, params)
    return sched


@dataclass(frozen=True)
class BestReport:
    """Objectives of both candidates plus the lower bounds."""

    greedy_cost: float
    line_cost: float | None
    chosen: str
    bounds: Bounds
    line_branch: str
    line_error: str | None = None


def best_schedule(jobs: JobSet, params: LsApproxParams | None = None,
                  use_exact_ls: bool = True) -> tuple[Schedule, BestReport]:
    """Better of greedy and the line-schedule branch.

    With ``use_exact_ls`` the branch is the exact fixed-point line schedule,
    otherwise the approximation pipeline with ``params``.  If the branch
    fails, greedy is returned with the failure noted.
    """
    g = greedy(jobs)
    g_cost = total_completion_time(jobs, g)
    branch = "ls" if use_exact_ls else "lsapprox"
    line_sched = None
    line_cost = None
    fractional = None
    err: str | None = None
    try:
        if use_exact_ls:
            line_sched, _, quantities = ls_exact(jobs)
            fractional = quantities.primal_cost
        else:
            line_sched = lsapprox(jobs, params if params is not None else LsApproxParams(0.5))
        line_cost = total_completion_time(jobs, line_sched)
    except (ConvergenceError, DegenerateVolumesError, PipelineError) as exc:
        err = str(exc)
    bounds = lower_bounds(jobs, fractional_opt=fractional)
    if line_cost is not None and line_cost < g_cost:
        return line_sched, BestReport(g_cost, line_cost, branch, bounds, branch, err)
    return g, BestReport(g_cost, line_cost, "greedy", bounds, branch, err)
