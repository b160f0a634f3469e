"""Scheduling jobs that share one continuously divisible resource.

Submodules:
    core      - jobs, step functions, schedules, objectives, validation, JSON
    waterfill - offline optimal makespan, online water-filling, universal shapes
    linesched - priority-line schedules, duals, the alpha fixed point
    lp        - slot-discretized LP with a self-contained simplex
    tct       - greedy, lower bounds, exact/approximate line scheduling
    cli       - gen | run | verify | compare | plot
"""

from .core import (
    ContractError,
    DEFAULT_TOL,
    Job,
    JobSet,
    PiecewiseLinear,
    Schedule,
    StepFunction,
    ValidationReport,
    Violation,
    fractional_completion_time,
    is_flatter,
    jobs_from_json,
    jobs_to_json,
    makespan,
    schedule_from_json,
    schedule_to_json,
    sum_steps,
    total_completion_time,
    upper_resource_distribution,
    validate_schedule,
)
from .waterfill import (
    COMPETITIVE_RATIO,
    OnlineRun,
    UniversalSchedule,
    WaterfillOutcome,
    adversarial_instance,
    extendability_check,
    flatter_than_universal,
    optimal_makespan,
    universal_eval,
    universal_upper_area,
    waterfill_online,
    waterfill_step,
)
from .linesched import (
    ConvergenceError,
    DegenerateVolumesError,
    DualityQuantities,
    LineSchedule,
    SlacknessReport,
    build_line_schedule,
    check_slackness,
    cost_rate,
    cost_rates_on_grid,
    dual_line,
    duality_quantities,
    scheduled_volumes,
    solve_alpha,
    split_volume_ties,
)
from .lp import (
    InfeasibleInstanceError,
    LpInstance,
    LpSolution,
    SimplexError,
    build_discretized_lp,
    dense_simplex,
    dump_lp,
    lp_schedule,
    solve_lp,
)
from .tct import (
    BestReport,
    Bounds,
    LsApproxInfo,
    LsApproxParams,
    PipelineError,
    Subdivision,
    best_schedule,
    greedy,
    lower_bounds,
    ls_exact,
    lsapprox,
    lsapprox_report,
    subdivide,
)
from . import cli  # noqa: E402  (after the symbols it re-uses)

__version__ = "0.1.0"
