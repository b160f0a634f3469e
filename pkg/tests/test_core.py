import json
import math

import numpy as np
import pytest

from sharesched import (
    ContractError,
    Job,
    JobSet,
    PiecewiseLinear,
    Schedule,
    StepFunction,
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
from sharesched.tct import greedy

from conftest import random_instance


def brute_eval(edges, values, t):
    for k in range(len(values)):
        if edges[k] <= t < edges[k + 1]:
            return values[k]
    return 0.0


def worked_line_schedule():
    """Rates of the solved 3-job line schedule, assembled by hand."""
    j1 = StepFunction([0.0, 1.0, 1.5], [0.75, 0.5])
    j2 = StepFunction([0.0, 1.0, 6.0, 9.75], [0.25, 0.5, 1.0 / 3.0])
    j3 = StepFunction([0.0, 1.5, 6.0, 11.625], [0.0, 0.5, 2.0 / 3.0])
    return Schedule([j1, j2, j3])


class TestJob:
    def test_fields(self):
        j = Job(2.0, 0.5)
        assert j.processing_time == 4.0

    @pytest.mark.parametrize("v,r", [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0),
                                     (1.0, -0.1), (1.0, 1.5), (math.inf, 0.5)])
    def test_rejects_bad_fields(self, v, r):
        with pytest.raises(ContractError):
            Job(v, r)

    def test_jobset_degeneracy(self):
        assert JobSet.of([(1, 1), (2, 1)]).non_degenerate()
        assert not JobSet.of([(1, 1), (1, 0.5)]).non_degenerate()
        assert JobSet().non_degenerate()


class TestStepFunction:
    def test_basic_shape_checks(self):
        with pytest.raises(ContractError):
            StepFunction([0.0, 1.0], [1.0, 2.0])
        with pytest.raises(ContractError):
            StepFunction([1.0, 2.0], [1.0])
        with pytest.raises(ContractError):
            StepFunction([0.0, 1.0, 1.0], [1.0, 2.0])

    def test_canonical_roundtrip_random(self):
        # merging equal adjacent values must not change any evaluation
        for seed in range(30):
            rng = np.random.default_rng(seed)
            k = int(rng.integers(1, 12))
            edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 1.0, k))])
            values = rng.choice([0.0, 0.25, 0.5, 0.75], size=k)
            f = StepFunction(edges, values)
            ts = rng.uniform(-0.5, edges[-1] + 0.5, 1000)
            want = np.array([brute_eval(edges, values, t) for t in ts])
            got = f(ts)
            assert np.array_equal(got, want)

    def test_integrals_match_brute_force(self):
        rng = np.random.default_rng(3)
        edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 1.0, 6))])
        values = rng.uniform(0.0, 1.0, 6)
        f = StepFunction(edges, values)
        w = np.diff(edges)
        assert f.integral() == pytest.approx(float(np.dot(values, w)), rel=1e-14)
        mids = 0.5 * (edges[:-1] + edges[1:])
        assert f.first_moment() == pytest.approx(float(np.dot(values * w, mids)), rel=1e-12)
        C = float(edges[3]) + 0.3 * float(w[3])
        want = float(np.dot(values[:3], w[:3]) + values[3] * 0.3 * w[3])
        assert f.integral_to(C) == pytest.approx(want, rel=1e-12)

    def test_sliver_absorbed_into_wide_interval(self):
        f = StepFunction([0.0, 1.0, 1.0 + 1e-15, 2.0], [0.5, 0.9, 0.25])
        assert np.array_equal(f.edges, [0.0, 1.0, 2.0])
        assert np.array_equal(f.values, [0.5, 0.25])

    def test_transforms(self):
        f = StepFunction([0.0, 1.0, 3.0], [1.0, 0.5])
        g = f.scale_time(2.0)
        assert g(1.9) == 1.0 and g(2.1) == 0.5
        assert g.integral() == pytest.approx(2.0 * f.integral())
        h = f.scale_values(0.5)
        assert h.integral() == pytest.approx(0.5 * f.integral())
        t = f.restrict(2.0)
        assert t.support_end == 2.0
        assert t.integral() == pytest.approx(1.0 + 0.5)

    def test_sum_steps(self):
        a = StepFunction([0.0, 2.0], [0.5])
        b = StepFunction([0.0, 1.0, 3.0], [0.25, 0.5])
        s = sum_steps([a, b])
        for t, want in [(0.5, 0.75), (1.5, 1.0), (2.5, 0.5), (3.5, 0.0)]:
            assert s(t) == pytest.approx(want)


class TestPiecewiseLinear:
    def test_eval_and_integral(self):
        p = PiecewiseLinear([0.0, 1.0, 2.0], [1.0, 0.5], [-0.5, -0.5])
        assert p(0.0) == 1.0
        assert p(0.5) == 0.75
        assert p(1.5) == 0.25
        assert p(2.5) == 0.0
        assert p.integral() == pytest.approx(0.75 + 0.25)


class TestValidation:
    def test_greedy_three_jobs_is_feasible(self, three_jobs):
        report = validate_schedule(three_jobs, greedy(three_jobs))
        assert report.feasible and not report.violations

    def test_overuse_detected(self):
        jobs = JobSet.of([(0.6, 0.7), (0.6, 0.7)])
        sched = Schedule([StepFunction.constant(0.6, 1.0)] * 2)
        report = validate_schedule(jobs, sched)
        kinds = {v.kind for v in report.violations}
        assert "overuse" in kinds
        over = [v for v in report.violations if v.kind == "overuse"][0]
        assert over.magnitude == pytest.approx(0.2)

    def test_volume_deficit_detected(self):
        jobs = JobSet.of([(1.0, 1.0)])
        sched = Schedule([StepFunction.constant(1.0, 0.5)])
        report = validate_schedule(jobs, sched)
        assert not report.feasible
        v = report.violations[0]
        assert v.kind == "volume-deficit" and v.magnitude == pytest.approx(0.5)

    def test_requirement_cap_detected(self):
        jobs = JobSet.of([(1.0, 0.5)])
        sched = Schedule([StepFunction.constant(0.8, 1.25)])
        report = validate_schedule(jobs, sched)
        assert any(v.kind == "requirement-exceeded" for v in report.violations)

    def test_cardinality_mismatch_raises(self):
        with pytest.raises(ContractError):
            validate_schedule(JobSet.of([(1, 1)]), Schedule.empty(2))


class TestObjectives:
    def test_makespan_examples(self):
        assert makespan(Schedule.empty(0)) == 0.0
        assert makespan(Schedule([StepFunction.constant(0.5, 2.0)])) == 2.0
        assert makespan(worked_line_schedule()) == pytest.approx(11.625, abs=1e-12)

    def test_total_completion_examples(self, three_jobs):
        single = JobSet.of([(1, 1)])
        assert total_completion_time(single, Schedule([StepFunction.constant(1.0, 1.0)])) == 1.0
        assert total_completion_time(three_jobs, greedy(three_jobs)) == pytest.approx(133.0 / 6.0, rel=1e-12)
        assert total_completion_time(three_jobs, worked_line_schedule()) == pytest.approx(22.875, abs=1e-12)

    def test_fractional_completion_examples(self):
        jobs = JobSet.of([(1, 1)])
        per, tot = fractional_completion_time(jobs, Schedule([StepFunction.constant(1.0, 1.0)]))
        assert per[0] == pytest.approx(0.5) and tot == pytest.approx(0.5)
        jobs2 = JobSet.of([(1, 0.5)])
        _, tot2 = fractional_completion_time(jobs2, Schedule([StepFunction.constant(0.5, 2.0)]))
        assert tot2 == pytest.approx(1.0)
        # shift law: unit rate on [a, a+1)
        a = 2.75
        shifted = Schedule([StepFunction([0.0, a, a + 1.0], [0.0, 1.0])])
        per3, _ = fractional_completion_time(jobs, shifted)
        assert per3[0] == pytest.approx(a + 0.5, rel=1e-12)

    def test_fractional_below_completion(self):
        for seed in range(25):
            jobs = random_instance(seed, 6)
            sched = greedy(jobs)
            per, _ = fractional_completion_time(jobs, sched)
            ct = sched.completion_times()
            assert np.all(np.asarray(per) <= ct + 1e-9)


class TestUpperArea:
    def test_examples(self):
        sched = Schedule([StepFunction.constant(1.0, 1.0)])
        assert upper_resource_distribution(sched, 100.0, 0.0) == pytest.approx(1.0)
        assert upper_resource_distribution(sched, 100.0, 1.0) == 0.0
        assert upper_resource_distribution(sched, 100.0, 0.5) == pytest.approx(0.5)

    def test_monotonicity(self):
        for seed in range(10):
            jobs = random_instance(seed, 5)
            sched = greedy(jobs)
            end = makespan(sched)
            ys = np.linspace(0, 1, 7)
            cs = np.linspace(0, end * 1.2, 7)
            areas = np.array([[upper_resource_distribution(sched, C, y) for C in cs] for y in ys])
            assert np.all(np.diff(areas, axis=0) <= 1e-12)   # nonincreasing in y
            assert np.all(np.diff(areas, axis=1) >= -1e-12)  # nondecreasing in C
            vol = float(jobs.volumes().sum())
            assert upper_resource_distribution(sched, end + 1, 0.0) == pytest.approx(vol, rel=1e-9)


class TestFlatter:
    def test_examples(self):
        flat = Schedule([StepFunction.constant(0.5, 2.0)])
        tall = Schedule([StepFunction.constant(1.0, 1.0)])
        assert is_flatter(flat, flat)
        assert is_flatter(flat, tall)
        assert not is_flatter(tall, flat)
        assert is_flatter(Schedule.empty(0), tall)

    def test_transitive_on_random_triples(self):
        hits = 0
        for seed in range(60):
            a = greedy(random_instance(3 * seed, 4))
            b = greedy(random_instance(3 * seed + 1, 4))
            c = greedy(random_instance(3 * seed + 2, 4))
            if is_flatter(a, b) and is_flatter(b, c):
                hits += 1
                assert is_flatter(a, c)
        assert hits > 0


class TestJson:
    def test_instance_roundtrip_bytes(self, three_jobs):
        text = jobs_to_json(three_jobs)
        again = jobs_to_json(jobs_from_json(text))
        assert text == again
        data = json.loads(text)
        assert list(data) == ["jobs"]
        assert set(data["jobs"][0]) == {"v", "r"}

    def test_schedule_roundtrip_bytes(self, three_jobs):
        sched = greedy(three_jobs)
        text = schedule_to_json(sched)
        again = schedule_to_json(schedule_from_json(text))
        assert text == again
        data = json.loads(text)
        assert data["breakpoints"][0] == 0.0
        assert len(data["assignments"]) == 3
        assert len(data["assignments"][0]) == len(data["breakpoints"]) - 1
        assert data["completion_times"] == pytest.approx([4 / 3, 26 / 3, 73 / 6])

    def test_17_digit_floats(self):
        jobs = JobSet.of([(1 / 3, 2 / 3)])
        text = jobs_to_json(jobs)
        assert "0.33333333333333331" in text

    def test_malformed_inputs(self):
        with pytest.raises(ContractError):
            jobs_from_json('{"not_jobs": []}')
        with pytest.raises(ContractError):
            schedule_from_json('{"breakpoints": [1.0, 2.0], "assignments": [[0.5]]}')
        with pytest.raises(ContractError):
            schedule_from_json('{"breakpoints": [0.0, 1.0], "assignments": [[0.5, 0.5]]}')
