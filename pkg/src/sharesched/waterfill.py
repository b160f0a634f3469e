"""Makespan: offline optimum, online water-filling, and flatness machinery.

The offline optimum is closed-form.  The online algorithm pours each arriving
job into the current schedule at the lowest water level that meets a target
completion time of (e/(e-1)) times the current offline optimum; universal
schedules are the analytic reference shapes that certify why those targets
always suffice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ContractError,
    DEFAULT_TOL,
    Job,
    JobSet,
    Schedule,
    StepFunction,
    _upper_area,
)

E = math.e
#: the optimal competitive ratio e / (e - 1)
COMPETITIVE_RATIO = E / (E - 1.0)


def optimal_makespan(jobs: JobSet) -> tuple[float, Schedule]:
    """Offline optimal makespan and a schedule attaining it.

    The optimum is max(total volume, longest processing time).  Constant
    rates v_j / p_max finish everything at p_max; when they oversubscribe the
    resource, scaling by the reciprocal usage finishes everything at the
    total volume instead.
    """
    if len(jobs) == 0:
        return 0.0, Schedule.empty(0)
    p_max = jobs.max_processing_time()
    total = jobs.total_volume()
    value = max(total, p_max)
    denom = p_max if total <= p_max else total
    return value, Schedule(
        StepFunction.constant(j.volume / denom, value) for j in jobs
    )


@dataclass(frozen=True)
class WaterfillOutcome:
    """Result of one water-fill step.

    On success ``schedule`` extends the input by the new job's assignment
    (the chosen water level truncated to the deadline) and ``level`` is that
    smallest sufficient water level.  On failure ``deficit`` is the volume
    that does not fit below level 1 by the deadline.
    """

    ok: bool
    schedule: Schedule | None = None
    level: float | None = None
    deficit: float = 0.0


def _usage_before(usage: StepFunction, C: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edge vector, widths and levels of ``usage`` restricted to [0, C)."""
    cut = int(np.searchsorted(usage.edges, C, side="left"))
    edges = np.append(usage.edges[:cut], C)
    levels = usage.values[: edges.size - 1]
    if levels.size < edges.size - 1:
        levels = np.append(levels, np.zeros(edges.size - 1 - levels.size))
    return edges, np.diff(edges), levels


def waterfill_step(sched: Schedule, job: Job, deadline: float,
                   tol: float = DEFAULT_TOL) -> WaterfillOutcome:
    """Augment ``sched`` by ``job`` finishing by ``deadline`` if possible.

    The level map h -> available volume below h is piecewise linear with
    kinks only at the usage levels and usage levels + requirement, so the
    smallest sufficient level is found exactly by interpolating between
    those candidates.
    """
    if deadline < 0.0:
        raise ContractError("deadline must be nonnegative")
    usage = sched.total_usage()
    if deadline == 0.0:
        return WaterfillOutcome(ok=False, deficit=job.volume)
    edges, widths, levels = _usage_before(usage, deadline)
    r, v = job.requirement, job.volume

    def volume_below(h: float) -> float:
        return float(np.dot(widths, np.minimum(r, np.maximum(h - levels, 0.0))))

    capacity = volume_below(1.0)
    if capacity < v - tol * max(1.0, v):
        return WaterfillOutcome(ok=False, deficit=v - capacity)
    cands = np.unique(np.concatenate([levels, levels + r, [0.0, 1.0]]))
    cands = cands[(cands >= 0.0) & (cands <= 1.0)]
    if cands[-1] < 1.0:
        cands = np.append(cands, 1.0)
    level = 1.0
    prev_h, prev_vol = cands[0], volume_below(cands[0])
    if prev_vol >= v:
        level = float(prev_h)
    else:
        for h in cands[1:]:
            val = volume_below(h)
            if val >= v:
                level = float(prev_h + (v - prev_vol) * (h - prev_h) / (val - prev_vol)) \
                    if val > prev_vol else float(h)
                break
            prev_h, prev_vol = h, val
    rates = np.minimum(r, np.maximum(level - levels, 0.0))
    assignment = StepFunction(edges, rates)
    return WaterfillOutcome(ok=True, schedule=sched.with_job(assignment), level=level)


@dataclass(frozen=True)
class OnlineRun:
    """Trace of the online water-filling recursion.

    ``schedules[j]`` is the schedule after placing jobs 0..j; ``targets`` and
    ``prefix_optima`` hold the attempted deadline and the offline optimum of
    each prefix (targets = ratio * prefix_optima).  ``failure_index`` is the
    0-based position of the first job that did not fit, or None.
    """

    schedules: tuple[Schedule, ...]
    targets: tuple[float, ...]
    prefix_optima: tuple[float, ...]
    levels: tuple[float, ...]
    failure_index: int | None = None
    failure_deficit: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failure_index is None

    def final_schedule(self) -> Schedule:
        return self.schedules[-1] if self.schedules else Schedule.empty(0)


def waterfill_online(jobs: JobSet, ratio: float = COMPETITIVE_RATIO,
                     tol: float = DEFAULT_TOL) -> OnlineRun:
    """Run water-filling in list order with targets ratio * prefix optimum.

    Failure is data, not an exception: the run stops at the first job whose
    volume does not fit and records its index and deficit.
    """
    if ratio < 1.0:
        raise ContractError("competitive ratio must be at least 1")
    sched = Schedule.empty(0)
    schedules: list[Schedule] = []
    targets: list[float] = []
    optima: list[float] = []
    levels: list[float] = []
    total = 0.0
    p_max = 0.0
    for idx, job in enumerate(jobs):
        total += job.volume
        p_max = max(p_max, job.processing_time)
        opt = max(total, p_max)
        target = ratio * opt
        optima.append(opt)
        targets.append(target)
        outcome = waterfill_step(sched, job, target, tol=tol)
        if not outcome.ok:
            return OnlineRun(tuple(schedules), tuple(targets), tuple(optima),
                             tuple(levels), failure_index=idx,
                             failure_deficit=outcome.deficit)
        sched = outcome.schedule
        schedules.append(sched)
        levels.append(outcome.level)
    return OnlineRun(tuple(schedules), tuple(targets), tuple(optima), tuple(levels))


class UniversalSchedule:
    """Analytic reference shape of a given volume.

    Full resource up to V/(e-1), then the logarithmic roll-off
    1 - ln(t (e-1) / V) until e V / (e-1), zero afterwards.  The shape is
    continuous, integrates to exactly V, and its upper area obeys the closed
    form ``(e^(1-y) - 1) / (e-1) * V``, which makes it just barely
    (e/(e-1))-extendable.
    """

    __slots__ = ("volume",)

    def __init__(self, volume: float):
        if volume < 0.0 or not math.isfinite(volume):
            raise ContractError("volume must be finite and nonnegative")
        object.__setattr__(self, "volume", float(volume))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("UniversalSchedule is immutable")

    @property
    def plateau_end(self) -> float:
        return self.volume / (E - 1.0)

    @property
    def support_end(self) -> float:
        return E * self.volume / (E - 1.0)

    def __call__(self, t: float) -> float:
        if self.volume == 0.0 or t < 0.0:
            return 0.0
        if t < self.plateau_end:
            return 1.0
        if t < self.support_end:
            return 1.0 - math.log(t * (E - 1.0) / self.volume)
        return 0.0

    def time_above(self, y: float) -> float:
        """sup{t : U(t) > y} for y in [0, 1]."""
        if self.volume == 0.0:
            return 0.0
        return self.volume * math.exp(1.0 - y) / (E - 1.0)

    def upper_area(self, y: float, horizon: float = math.inf) -> float:
        """Exact volume above height y before ``horizon``."""
        if self.volume == 0.0 or horizon <= 0.0 or y >= 1.0:
            return 0.0
        T = min(horizon, self.time_above(y))
        plateau = self.plateau_end
        if T <= plateau:
            return (1.0 - y) * T
        return T * (2.0 - y - math.log(T * (E - 1.0) / self.volume)) - plateau

    def step_under(self, levels: int = 512) -> StepFunction:
        """Staircase below the shape (each slab cut at its upper height)."""
        return self._staircase(levels, under=True)

    def step_over(self, levels: int = 512) -> StepFunction:
        """Staircase above the shape (each slab extended to its lower height)."""
        return self._staircase(levels, under=False)

    def _staircase(self, levels: int, under: bool) -> StepFunction:
        if self.volume == 0.0:
            return StepFunction.zero()
        ys = np.linspace(0.0, 1.0, levels + 1)
        times = np.array([self.time_above(y) for y in ys])  # decreasing in y
        edges = np.concatenate([[0.0], times[::-1]])        # 0, tau(1), ..., tau(0)
        # intervals: [0, tau(1)), then [tau(y_{k+1}), tau(y_k)) for k = m-1..0;
        # the shape lies in (y_k, y_{k+1}] there, so the staircase takes the
        # slab's upper height (over) or lower height (under).
        ys_desc = ys[::-1]
        if under:
            vals = np.concatenate([[1.0], ys_desc[1:]])
        else:
            vals = np.concatenate([[1.0], ys_desc[:-1]])
        return StepFunction(edges, vals)


def universal_eval(u: UniversalSchedule, t: float) -> float:
    """Resource level of the universal schedule at time t."""
    if t < 0.0:
        raise ContractError("t must be nonnegative")
    return u(t)


def universal_upper_area(volume: float, y: float) -> float:
    """Closed-form upper area of the universal schedule: (e^(1-y)-1)/(e-1)*V."""
    if not (0.0 <= y <= 1.0):
        raise ContractError("y must lie in [0, 1]")
    return (math.exp(1.0 - y) - 1.0) / (E - 1.0) * volume


def _universal_area_matrix(u: UniversalSchedule, horizons: np.ndarray,
                           ys: np.ndarray) -> np.ndarray:
    """u.upper_area at every (y, horizon) pair, vectorized."""
    if u.volume == 0.0:
        return np.zeros((ys.size, horizons.size))
    tau = u.volume * np.exp(1.0 - ys) / (E - 1.0)
    T = np.minimum(horizons[None, :], tau[:, None])
    plateau = u.plateau_end
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.log(np.maximum(T, 1e-300) * (E - 1.0) / u.volume)
    rolloff = T * (2.0 - ys[:, None] - log_term) - plateau
    out = np.where(T <= plateau, (1.0 - ys[:, None]) * T, rolloff)
    out[ys >= 1.0, :] = 0.0
    return np.maximum(out, 0.0)


def flatter_than_universal(sched: Schedule, volume: float,
                           tol: float = DEFAULT_TOL) -> bool:
    """Exact check that ``sched`` is flatter than the universal shape.

    For a fixed height the upper-area difference is convex in the horizon on
    every usage-constant interval, so horizons are checked at usage
    breakpoints only; heights are checked at usage levels plus the points
    where the reference shape's width matches a usage measure (the only
    interior critical points of the height profile).
    """
    u = UniversalSchedule(volume)
    usage = sched.total_usage()
    far = max(usage.support_end, u.support_end) + 1.0
    horizons = np.unique(np.append(usage.edges, far))
    levels = np.unique(np.concatenate([usage.values, [0.0, 1.0]]))
    levels = levels[(levels >= 0.0) & (levels <= 1.0)]
    ys = levels
    if volume > 0.0 and usage.values.size:
        # measures of {usage > level} before each horizon, via cumulative sums
        w = np.diff(usage.edges)
        above = (usage.values[None, :] > levels[:, None]).astype(float)
        cum = np.concatenate([np.zeros((levels.size, 1)),
                              np.cumsum(above * w[None, :], axis=1)], axis=1)
        pos = np.clip(np.searchsorted(usage.edges, horizons, side="right") - 1,
                      0, usage.values.size)
        measures = np.unique(cum[:, pos])
        measures = measures[measures > 0.0]
        ystar = 1.0 - np.log(measures * (E - 1.0) / volume)
        ys = np.unique(np.concatenate([ys, ystar[(ystar >= 0.0) & (ystar <= 1.0)]]))
    from .core import _area_matrix

    a_sched = _area_matrix(usage, horizons, ys)
    a_ref = _universal_area_matrix(u, horizons, ys)
    return bool(np.all(a_sched <= a_ref + tol * np.maximum(1.0, a_ref)))


def extendability_check(sched: Schedule, jobs: JobSet, ratio: float,
                        grid: int = 64, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``sched`` can absorb any further job at the same ratio.

    Tests A(y) <= (ratio-1) * (1-y)/y * max(V, p_max * y) for all heights y
    in ((ratio-1)/ratio, 1], evaluated at every usage level plus ``grid``
    uniform samples.
    """
    if ratio <= 1.0:
        raise ContractError("ratio must exceed 1")
    if grid < 1:
        raise ContractError("grid must be positive")
    total = jobs.total_volume()
    p_max = jobs.max_processing_time()
    usage = sched.total_usage()
    lo = (ratio - 1.0) / ratio
    ys = np.concatenate([
        usage.values[(usage.values > lo) & (usage.values <= 1.0)],
        np.linspace(lo, 1.0, grid + 1)[1:],
    ])
    far = usage.support_end + 1.0
    for y in np.unique(ys):
        bound = (ratio - 1.0) * (1.0 - y) / y * max(total, p_max * y)
        if _upper_area(usage, far, float(y)) > bound + tol * max(1.0, bound):
            return False
    return True


def adversarial_instance(n: int) -> JobSet:
    """n jobs with volume 1/n and requirement 1/j; prefix optima are j/n.

    Every ratio below e/(e-1) makes online water-filling fail on this family
    once n is large enough.
    """
    if n < 1:
        raise ContractError("n must be at least 1")
    return JobSet(Job(1.0 / n, 1.0 / j) for j in range(1, n + 1))
