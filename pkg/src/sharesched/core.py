"""Domain types for jobs that share one divisible resource.

A job owns a processing volume (resource x time) and a requirement cap (the
largest fraction of the unit resource it can absorb at any instant).  A
schedule assigns every job a piecewise-constant rate over time.  This module
holds those carriers plus the shared objective and feasibility machinery used
by every algorithm in the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

#: default absolute comparison tolerance on resource levels; volume and time
#: comparisons scale it by the magnitude of the quantity involved.
DEFAULT_TOL = 1e-9

#: breakpoints closer than this fraction of the support end are merged.
SLIVER_REL = 1e-12


class ContractError(ValueError):
    """An operation was called outside its contract (bad shapes, bad args)."""


@dataclass(frozen=True)
class Job:
    """One job: total volume and maximum instantaneous resource share.

    ``volume`` is in resource x time units and must be positive.
    ``requirement`` lies in (0, 1]; a zero requirement is rejected because a
    positive-volume job could then never finish.
    """

    volume: float
    requirement: float

    def __post_init__(self) -> None:
        v, r = float(self.volume), float(self.requirement)
        if not (math.isfinite(v) and v > 0.0):
            raise ContractError(f"volume must be positive and finite, got {self.volume!r}")
        if not (math.isfinite(r) and 0.0 < r <= 1.0):
            raise ContractError(f"requirement must lie in (0, 1], got {self.requirement!r}")
        object.__setattr__(self, "volume", v)
        object.__setattr__(self, "requirement", r)

    @property
    def processing_time(self) -> float:
        """Shortest possible duration: volume / requirement."""
        return self.volume / self.requirement


class JobSet:
    """Ordered, immutable collection of jobs.

    Order matters: online algorithms consume jobs in list order, and job ids
    used throughout the package are 0-based positions in this list.
    """

    __slots__ = ("jobs",)

    def __init__(self, jobs: Iterable[Job] = ()):
        object.__setattr__(self, "jobs", tuple(jobs))
        for j in self.jobs:
            if not isinstance(j, Job):
                raise ContractError(f"expected Job, got {type(j).__name__}")

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("JobSet is immutable")

    def __len__(self) -> int:
        return len(self.jobs)

    def __iter__(self) -> Iterator[Job]:
        return iter(self.jobs)

    def __getitem__(self, i: int) -> Job:
        return self.jobs[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, JobSet) and self.jobs == other.jobs

    def __repr__(self) -> str:
        return f"JobSet({list(self.jobs)!r})"

    @classmethod
    def of(cls, pairs: Iterable[tuple[float, float]]) -> "JobSet":
        """Build from (volume, requirement) pairs."""
        return cls(Job(v, r) for v, r in pairs)

    def volumes(self) -> np.ndarray:
        return np.array([j.volume for j in self.jobs], dtype=float)

    def requirements(self) -> np.ndarray:
        return np.array([j.requirement for j in self.jobs], dtype=float)

    def processing_times(self) -> np.ndarray:
        return np.array([j.processing_time for j in self.jobs], dtype=float)

    def total_volume(self) -> float:
        return float(sum(j.volume for j in self.jobs))

    def max_processing_time(self) -> float:
        return max((j.processing_time for j in self.jobs), default=0.0)

    def non_degenerate(self) -> bool:
        """True when all volumes are pairwise distinct (exact comparison)."""
        vols = [j.volume for j in self.jobs]
        return len(set(vols)) == len(vols)

    def prefix(self, k: int) -> "JobSet":
        return JobSet(self.jobs[:k])


class StepFunction:
    """Right-continuous piecewise-constant function with bounded support.

    The value is ``values[i]`` on the right-open interval
    ``[edges[i], edges[i+1])`` and 0 for ``t >= edges[-1]`` as well as for
    ``t < 0``.  ``edges[0]`` is always 0.  Instances are canonical: adjacent
    equal values are merged, the zero tail is trimmed, and sliver intervals
    narrower than ``SLIVER_REL`` times the support end are absorbed.
    """

    __slots__ = ("edges", "values")

    def __init__(self, edges: Sequence[float], values: Sequence[float]):
        e = np.asarray(edges, dtype=float)
        v = np.asarray(values, dtype=float)
        if e.ndim != 1 or v.ndim != 1 or e.size != v.size + 1:
            raise ContractError("need len(edges) == len(values) + 1")
        if e.size == 0 or e[0] != 0.0:
            raise ContractError("edges must start at 0")
        if not np.all(np.isfinite(e)) or not np.all(np.isfinite(v)):
            raise ContractError("edges and values must be finite")
        if np.any(np.diff(e) <= 0.0):
            raise ContractError("edges must be strictly increasing")
        e, v = _canonical(e, v)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "values", v)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("StepFunction is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls([0.0], [])

    @classmethod
    def constant(cls, value: float, end: float) -> "StepFunction":
        """``value`` on [0, end), zero afterwards."""
        if end <= 0.0:
            return cls.zero()
        return cls([0.0, float(end)], [float(value)])

    # -- queries -----------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.edges, t, side="right") - 1
        ok = (idx >= 0) & (idx < self.values.size)
        safe = np.clip(idx, 0, max(self.values.size - 1, 0))
        vals = self.values[safe] if self.values.size else np.zeros_like(t)
        out = np.where(ok, vals, 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def support_end(self) -> float:
        """sup{t : f(t) != 0}; 0 for the zero function."""
        return float(self.edges[-1]) if self.values.size else 0.0

    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def integral(self) -> float:
        return float(np.dot(self.values, self.widths())) if self.values.size else 0.0

    def integral_to(self, C: float) -> float:
        """Integral over [0, C)."""
        if C <= 0.0 or not self.values.size:
            return 0.0
        hi = np.minimum(self.edges[1:], C)
        lo = np.minimum(self.edges[:-1], C)
        return float(np.dot(self.values, hi - lo))

    def first_moment(self) -> float:
        """Integral of t * f(t) over the support."""
        if not self.values.size:
            return 0.0
        seg = 0.5 * (self.edges[1:] ** 2 - self.edges[:-1] ** 2)
        return float(np.dot(self.values, seg))

    # -- transforms --------------------------------------------------------

    def scale_values(self, factor: float) -> "StepFunction":
        return StepFunction(self.edges, self.values * factor)

    def scale_time(self, factor: float) -> "StepFunction":
        """Horizontal stretch: result(t) = self(t / factor)."""
        if factor <= 0.0:
            raise ContractError("time scale factor must be positive")
        return StepFunction(self.edges * factor, self.values)

    def restrict(self, C: float) -> "StepFunction":
        """Truncate to [0, C)."""
        if C <= 0.0:
            return StepFunction.zero()
        cut = int(np.searchsorted(self.edges, C, side="left"))
        e = np.append(self.edges[:cut], C)
        v = self.values[: e.size - 1]
        if v.size < e.size - 1:
            v = np.append(v, np.zeros(e.size - 1 - v.size))
        return StepFunction(e, v)

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return sum_steps([self, other])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StepFunction)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"StepFunction(edges={self.edges.tolist()}, values={self.values.tolist()})"


def _canonical(e: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # absorb sliver intervals into the next wide interval (trailing slivers
    # into the previous one); the perturbation is at most the sliver width
    if v.size:
        thresh = SLIVER_REL * e[-1]
        w = np.diff(e)
        wide = w >= thresh
        if not wide.all() and wide.any():
            idx = np.flatnonzero(wide)
            ends = e[idx + 1]
            ends[-1] = e[-1]
            e = np.concatenate([[e[0]], ends])
            v = v[idx]
    # merge equal adjacent values
    if v.size:
        keep = np.empty(v.size, dtype=bool)
        keep[0] = True
        keep[1:] = v[1:] != v[:-1]
        starts = e[:-1][keep]
        e = np.append(starts, e[-1])
        v = v[keep]
    # trim zero tail
    while v.size and v[-1] == 0.0:
        v = v[:-1]
        e = e[:-1]
    if not v.size:
        return np.array([0.0]), np.array([], dtype=float)
    return e, v


def sum_steps(fns: Sequence[StepFunction]) -> StepFunction:
    """Pointwise sum of step functions."""
    fns = [f for f in fns if f.values.size]
    if not fns:
        return StepFunction.zero()
    grid = np.unique(np.concatenate([f.edges for f in fns]))
    mids = 0.5 * (grid[:-1] + grid[1:])
    total = np.zeros(mids.size)
    for f in fns:
        total += f(mids)
    return StepFunction(grid, total)


class PiecewiseLinear:
    """Piecewise-affine function with bounded support, zero outside it.

    Segment ``i`` covers ``[edges[i], edges[i+1])`` with value
    ``starts[i] + slopes[i] * (t - edges[i])``.  Jump discontinuities at the
    edges are allowed.
    """

    __slots__ = ("edges", "starts", "slopes")

    def __init__(self, edges: Sequence[float], starts: Sequence[float], slopes: Sequence[float]):
        e = np.asarray(edges, dtype=float)
        a = np.asarray(starts, dtype=float)
        s = np.asarray(slopes, dtype=float)
        if e.size != a.size + 1 or a.size != s.size:
            raise ContractError("need len(edges) == len(starts) + 1 == len(slopes) + 1")
        if e.size == 0 or e[0] != 0.0 or np.any(np.diff(e) <= 0.0):
            raise ContractError("edges must start at 0 and increase strictly")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "starts", a)
        object.__setattr__(self, "slopes", s)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("PiecewiseLinear is immutable")

    @classmethod
    def zero(cls) -> "PiecewiseLinear":
        return cls([0.0], [], [])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.edges, t, side="right") - 1
        ok = (idx >= 0) & (idx < self.starts.size)
        safe = np.clip(idx, 0, max(self.starts.size - 1, 0))
        if self.starts.size:
            vals = self.starts[safe] + self.slopes[safe] * (t - self.edges[:-1][safe])
        else:
            vals = np.zeros_like(t)
        out = np.where(ok, vals, 0.0)
        return float(out) if out.ndim == 0 else out

    def integral(self) -> float:
        if not self.starts.size:
            return 0.0
        w = np.diff(self.edges)
        return float(np.dot(w, self.starts + 0.5 * self.slopes * w))


@dataclass(frozen=True)
class Schedule:
    """One resource-rate step function per job, in job order."""

    assignments: tuple[StepFunction, ...]

    def __init__(self, assignments: Iterable[StepFunction]):
        object.__setattr__(self, "assignments", tuple(assignments))

    @property
    def n_jobs(self) -> int:
        return len(self.assignments)

    @classmethod
    def empty(cls, n_jobs: int = 0) -> "Schedule":
        return cls(StepFunction.zero() for _ in range(n_jobs))

    def completion_times(self) -> np.ndarray:
        return np.array([a.support_end for a in self.assignments])

    def volumes(self) -> np.ndarray:
        return np.array([a.integral() for a in self.assignments])

    def total_usage(self) -> StepFunction:
        return sum_steps(self.assignments)

    def with_job(self, assignment: StepFunction) -> "Schedule":
        return Schedule(self.assignments + (assignment,))

    def scale_time(self, factor: float) -> "Schedule":
        return Schedule(a.scale_time(factor) for a in self.assignments)


@dataclass(frozen=True)
class Violation:
    """One feasibility clause breach.

    ``kind`` is one of ``overuse``, ``requirement-exceeded``,
    ``volume-deficit``.  ``job`` is a 0-based id (None for overuse) and
    ``interval`` the offending time window (None for volume-deficit).
    """

    kind: str
    magnitude: float
    job: int | None = None
    interval: tuple[float, float] | None = None


@dataclass(frozen=True)
class ValidationReport:
    feasible: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    def max_magnitude(self) -> float:
        return max((v.magnitude for v in self.violations), default=0.0)


def validate_schedule(jobs: JobSet, sched: Schedule, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check all three feasibility clauses, reporting violations above tol.

    Resource clauses use ``tol`` absolutely; the volume clause scales it by
    max(1, volume).  Raises ContractError when job and assignment counts
    differ.
    """
    if len(jobs) != sched.n_jobs:
        raise ContractError(f"{len(jobs)} jobs but {sched.n_jobs} assignments")
    violations: list[Violation] = []
    for idx, (job, a) in enumerate(zip(jobs, sched.assignments)):
        over = a.values - job.requirement if a.values.size else np.array([])
        if over.size and float(over.max()) > tol:
            k = int(np.argmax(over))
            violations.append(
                Violation("requirement-exceeded", float(over[k]), job=idx,
                          interval=(float(a.edges[k]), float(a.edges[k + 1])))
            )
        deficit = job.volume - a.integral()
        if deficit > tol * max(1.0, job.volume):
            violations.append(Violation("volume-deficit", float(deficit), job=idx))
    usage = sched.total_usage()
    if usage.values.size:
        over = usage.values - 1.0
        if float(over.max()) > tol:
            k = int(np.argmax(over))
            violations.append(
                Violation("overuse", float(over[k]),
                          interval=(float(usage.edges[k]), float(usage.edges[k + 1])))
            )
    return ValidationReport(feasible=not violations, violations=tuple(violations))


def makespan(sched: Schedule) -> float:
    """Latest completion time; 0 for an empty schedule."""
    ct = sched.completion_times()
    return float(ct.max()) if ct.size else 0.0


def total_completion_time(jobs: JobSet, sched: Schedule) -> float:
    if len(jobs) != sched.n_jobs:
        raise ContractError("job/assignment count mismatch")
    return float(sched.completion_times().sum())


def fractional_completion_time(jobs: JobSet, sched: Schedule) -> tuple[list[float], float]:
    """Volume-weighted mean completion per job and its sum.

    Per job this is the exact integral of t * R_j(t) / v_j over the step
    grid.
    """
    if len(jobs) != sched.n_jobs:
        raise ContractError("job/assignment count mismatch")
    per_job = [a.first_moment() / job.volume for job, a in zip(jobs, sched.assignments)]
    return per_job, float(sum(per_job))


def upper_resource_distribution(sched: Schedule, C: float, y: float) -> float:
    """Total volume above height ``y`` before time ``C`` in the schedule."""
    if not (0.0 <= y <= 1.0 + DEFAULT_TOL):
        raise ContractError("y must lie in [0, 1]")
    if C < 0.0:
        raise ContractError("C must be nonnegative")
    usage = sched.total_usage()
    return _upper_area(usage, C, y)


def _upper_area(usage: StepFunction, C: float, y: float) -> float:
    if not usage.values.size or C <= 0.0:
        return 0.0
    hi = np.minimum(usage.edges[1:], C)
    lo = np.minimum(usage.edges[:-1], C)
    return float(np.dot(hi - lo, np.maximum(usage.values - y, 0.0)))


def _area_matrix(usage: StepFunction, horizons: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Upper areas of a usage profile at every (y, horizon) pair.

    Returns a (len(ys), len(horizons)) matrix; linear in the number of usage
    intervals thanks to cumulative sums at the usage edges.
    """
    ny, nc = ys.size, horizons.size
    if not usage.values.size:
        return np.zeros((ny, nc))
    e, u = usage.edges, usage.values
    w = np.diff(e)
    above = np.maximum(u[None, :] - ys[:, None], 0.0)            # (ny, ni)
    cum = np.concatenate([np.zeros((ny, 1)), np.cumsum(above * w[None, :], axis=1)], axis=1)
    pos = np.searchsorted(e, horizons, side="right") - 1          # (nc,)
    k = np.clip(pos, 0, u.size - 1)
    inside = (pos >= 0) & (pos < u.size)
    partial = cum[:, k] + (horizons - e[k])[None, :] * above[:, k]
    full = np.broadcast_to(cum[:, -1][:, None], (ny, nc))
    return np.where(inside[None, :], partial, np.where(pos[None, :] >= u.size, full, 0.0))


def is_flatter(first: Schedule, second: Schedule, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``first`` has pointwise no larger upper resource distribution.

    Checked on the finite grid of both schedules' breakpoints crossed with
    both usage levels (plus 0); between those points the difference is linear
    in the horizon and a difference of convex piecewise-linear functions of
    the height, so the grid check is exact.
    """
    u1 = first.total_usage()
    u2 = second.total_usage()
    horizons = np.unique(np.concatenate([u1.edges, u2.edges]))
    levels = np.unique(np.concatenate([u1.values, u2.values, [0.0]]))
    levels = levels[(levels >= 0.0) & (levels <= 1.0)]
    a1 = _area_matrix(u1, horizons, levels)
    a2 = _area_matrix(u2, horizons, levels)
    return bool(np.all(a1 <= a2 + tol * np.maximum(1.0, a2)))


# -- JSON interchange -------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _dump(obj) -> str:
    """json.dumps with floats rendered at 17 significant digits."""
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(k)}: {_dump(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_dump(v) for v in obj) + "]"
    return json.dumps(obj)


def jobs_to_json(jobs: JobSet) -> str:
    return _dump({"jobs": [{"v": j.volume, "r": j.requirement} for j in jobs]}) + "\n"


def jobs_from_json(text: str) -> JobSet:
    data = json.loads(text)
    try:
        return JobSet(Job(rec["v"], rec["r"]) for rec in data["jobs"])
    except (KeyError, TypeError) as exc:
        raise ContractError(f"malformed instance JSON: {exc}") from exc


def schedule_to_json(sched: Schedule) -> str:
    grid = np.unique(np.concatenate([a.edges for a in sched.assignments])) if sched.n_jobs else np.array([0.0])
    mids = 0.5 * (grid[:-1] + grid[1:])
    rows = [[float(x) for x in a(mids)] if mids.size else [] for a in sched.assignments]
    payload = {
        "breakpoints": [float(t) for t in grid],
        "assignments": rows,
        "completion_times": [float(c) for c in sched.completion_times()],
    }
    return _dump(payload) + "\n"


def schedule_from_json(text: str) -> Schedule:
    data = json.loads(text)
    try:
        grid = [float(t) for t in data["breakpoints"]]
        rows = data["assignments"]
    except (KeyError, TypeError) as exc:
        raise ContractError(f"malformed schedule JSON: {exc}") from exc
    if not grid or grid[0] != 0.0:
        raise ContractError("schedule breakpoints must start at 0")
    assignments = []
    for row in rows:
        if len(row) != len(grid) - 1:
            raise ContractError("assignment row length must be len(breakpoints) - 1")
        assignments.append(StepFunction(grid, [float(x) for x in row]))
    return Schedule(assignments)
