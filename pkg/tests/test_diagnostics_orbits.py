"""Tests for orbit diagnostics: rate fits, contraction and gap bounds."""

from __future__ import annotations

import numpy as np
import pytest

from marp.errors import InvalidParameterError, NoDataError, NotConvergedError
from marp.models.enums import RateMode, RunStatus
from marp.models.schemas import ConstantSchedule, GeometricSchedule
from marp.services import diagnostics
from marp.services.geometry import AffineSubspace, Ball, Box, FiniteSet, Sphere
from marp.services.rates import vanishing_limit_bound
from marp.services.sawtooth import sawtooth_pair
from marp.services.solver import MarpConfig, run


def _const(value: float) -> ConstantSchedule:
    return ConstantSchedule(value=value)


def _three_point_run(lam: float, **kwargs):
    return run(
        MarpConfig(
            set_a=FiniteSet([[-3.0], [2.0]]),
            set_b=FiniteSet([[-3.0], [6.0]]),
            lam=_const(lam),
            mu=_const(lam),
            start=np.zeros(1),
            **kwargs,
        )
    )


def _axes_run(lam: float, start=(1.0, 1.0), **kwargs):
    return run(
        MarpConfig(
            set_a=AffineSubspace([0.0, 0.0], [[1.0, 0.0]]),
            set_b=AffineSubspace([0.0, 0.0], [[0.0, 1.0]]),
            lam=_const(lam),
            mu=_const(lam),
            start=np.asarray(start, dtype=np.float64),
            **kwargs,
        )
    )


def test_interleaved_gaps_alternate_half_steps():
    t = _three_point_run(0.5, gap_tol=1e-12)
    positions, gaps = diagnostics.interleaved_gaps(t)
    assert positions[:4].tolist() == [0.0, 1.0, 2.0, 3.0]
    np.testing.assert_allclose(gaps[:4], [1.0, 2.0, 1.0, 0.5])


def test_iteration_and_half_step_rates_differ_by_a_square():
    t = _three_point_run(0.5, gap_tol=1e-12)
    per_iteration = diagnostics.empirical_rate(t, window=10)
    per_half_step = diagnostics.empirical_rate(t, window=16, mode=RateMode.HALF_STEP)
    assert per_half_step.rate == pytest.approx(0.5, abs=1e-4)
    assert per_iteration.rate == pytest.approx(0.25, abs=1e-4)
    assert per_half_step.fit_quality == pytest.approx(1.0)
    assert per_half_step.mode == RateMode.HALF_STEP


def test_empirical_rate_needs_three_positive_gaps():
    t = _three_point_run(1.0)
    assert t.status.kind == RunStatus.CYCLE
    with pytest.raises(NoDataError):
        diagnostics.empirical_rate(t)
    with pytest.raises(InvalidParameterError):
        diagnostics.empirical_rate(t, window=1)


def test_finite_convergence_reports_exact_rate_zero():
    t = _axes_run(1.0)
    assert t.status.kind == RunStatus.CONVERGED
    rate = diagnostics.empirical_rate(t)
    assert rate.exact_convergence
    assert rate.rate == 0.0


def test_contraction_check_on_orthogonal_lines():
    t = _axes_run(0.5, gap_tol=1e-12)
    report = diagnostics.contraction_check(t, [0.0, 0.0], r=10.0, rho=0.5)
    assert report.holds
    assert report.checked == len(report.satisfied)
    assert report.worst_ratio == pytest.approx(0.5)

    tight = diagnostics.contraction_check(t, [0.0, 0.0], r=10.0, rho=0.4)
    assert not tight.holds

    far = diagnostics.contraction_check(t, [100.0, 100.0], r=1.0, rho=0.1)
    assert far.holds
    assert far.checked == 0


def test_contraction_check_rejects_bad_arguments():
    t = _axes_run(0.5)
    with pytest.raises(InvalidParameterError):
        diagnostics.contraction_check(t, [0.0, 0.0], r=0.0, rho=0.5)
    with pytest.raises(InvalidParameterError):
        diagnostics.contraction_check(t, [0.0, 0.0], r=1.0, rho=1.0)
    sparse = _axes_run(0.5, record_every=3)
    with pytest.raises(InvalidParameterError):
        diagnostics.contraction_check(sparse, [0.0, 0.0], r=1.0, rho=0.5)


def test_tail_bound_with_abstract_radius():
    t = _axes_run(0.5, gap_tol=1e-12)
    M = float(max(t.g[0], t.h[0]))
    assert diagnostics.abstract_radius_check(M, r=10.0, rho=0.5)
    assert not diagnostics.abstract_radius_check(M, r=1.0, rho=0.5)
    assert diagnostics.gap_envelope_check(t, M, 0.5)
    assert diagnostics.tail_bound_check(t, M, 0.5)
    assert not diagnostics.tail_bound_check(t, M / 10.0, 0.5)

    with pytest.raises(NotConvergedError):
        diagnostics.tail_bound_check(_three_point_run(1.0), 1.0, 0.5)


def test_geometric_schedules_on_the_sawtooth_pair():
    set_a, set_b = sawtooth_pair()
    schedule = GeometricSchedule(initial=0.5, ratio=0.9)
    rng = np.random.default_rng(9)
    for start in rng.uniform(-0.1, 0.1, size=(5, 2)):
        t = run(
            MarpConfig(
                set_a=set_a,
                set_b=set_b,
                lam=schedule,
                mu=schedule,
                start=start,
                max_iter=2000,
                gap_tol=1e-12,
            )
        )
        assert t.status.kind == RunStatus.CONVERGED
        M = float(max(t.g[0], t.h[0]))
        assert diagnostics.gap_envelope_check(t, M, 0.9)

        beta = max(set_a.distance(start), set_b.distance(start))
        bound = vanishing_limit_bound(0.5, 0.9, beta, beta)
        assert np.linalg.norm(t.status.limit - start) <= bound + 1e-12
        assert diagnostics.empirical_rate(t).rate <= 0.92
        assert diagnostics.verify_gap_recursion(t).holds


def test_gap_recursion_holds_on_worked_orbits():
    assert diagnostics.verify_gap_recursion(_three_point_run(0.5)).holds
    assert diagnostics.verify_gap_recursion(_three_point_run(0.35)).holds
    assert diagnostics.verify_gap_recursion(_axes_run(0.3, start=(4.0, -2.0))).holds


def test_first_step_bounds_on_three_points():
    bounds = diagnostics.first_step_bounds(
        FiniteSet([[-3.0], [2.0]]), FiniteSet([[-3.0], [6.0]]), 0.5, 0.5, [0.0]
    )
    assert bounds.beta == 3.0
    assert bounds.step_a == 1.0
    assert bounds.step_a_expected == 1.0
    assert bounds.step_b == 2.0
    assert bounds.combined_bound == pytest.approx(2.25)
    assert bounds.holds


def test_convex_sets_absorb_their_projection_segments():
    report = diagnostics.absorbing_sample_check(
        Ball([0.0, 0.0], 5.0), Ball([0.0, 0.0], 1.0), samples=200, seed=4
    )
    assert report.absorbing
    assert report.tested == 200
    assert report.witness is None


def test_sphere_is_not_absorbing_for_an_inner_ball():
    sphere = Sphere([0.0, 0.0], 2.0)
    report = diagnostics.absorbing_sample_check(
        sphere, Ball([0.0, 0.0], 1.0), samples=20, seed=4
    )
    assert not report.absorbing
    s, a, p = report.witness
    assert np.linalg.norm(s) == pytest.approx(2.0)
    assert np.linalg.norm(a) == pytest.approx(1.0)
    assert sphere.distance(p) > 0


def test_orbit_stays_inside_an_absorbing_set():
    box = Box([-10.0, -10.0], [10.0, 10.0])
    set_a = AffineSubspace([0.0, 0.0], [[1.0, 0.0]])
    set_b = AffineSubspace([0.0, 0.0], [[0.0, 1.0]])
    assert diagnostics.absorbing_sample_check(box, set_a, samples=100, seed=1).absorbing
    assert diagnostics.absorbing_sample_check(box, set_b, samples=100, seed=1).absorbing

    t = _axes_run(0.4, start=(9.0, -7.5))
    for point in np.vstack([t.x, t.y]):
        assert box.distance(point) == 0.0
