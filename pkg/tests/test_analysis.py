"""
Copyright (c) 2026 The chemolab authors

This file is part of chemolab.

chemolab is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

chemolab is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with chemolab.  If not, see <https://www.gnu.org/licenses/>.
"""
import math

import numpy as np
import pytest

from chemolab.analysis import (
    InequalityCheck, VerificationReport, check_convergence_theorem, check_steady_bounds,
    check_trajectory_bounds, compute_F_e2_star, fit_decay_rate, render_summary
)
from chemolab.evolve import (
    TrajectoryRecord, TrajectorySample, simulate, uniform_bound_constants
)
from chemolab.exceptions import DomainError
from chemolab.mesh import ScalarField
from chemolab.steady import SteadyStatePair, compute_gamma_star, fixed_point_steady
from tests.common import cosine_density, interval_grid, make_params, SQRT2


def exponential_series(rate=2.0, scale=1.0, count=20):
    times = np.linspace(0.0, 5.0, count)
    return list(zip(times, scale * np.exp(-rate * times)))


def test_fit_recovers_an_exact_exponential():
    fit = fit_decay_rate(exponential_series())

    assert fit.rate == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_is_invariant_under_scaling():
    assert fit_decay_rate(exponential_series(scale=7.0)).rate \
        == pytest.approx(fit_decay_rate(exponential_series()).rate)


def test_fit_of_constant_series_has_zero_rate():
    fit = fit_decay_rate([(t, 3.0) for t in range(10)])

    assert fit.rate == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0


def test_fit_restricted_to_a_window():
    series = exponential_series(count=51)
    series[0] = (0.0, 100.0)

    assert fit_decay_rate(series, window=(1.0, 5.0)).rate == pytest.approx(2.0)


@pytest.mark.parametrize("series", [
    [(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)],
    [(0.0, 1.0), (1.0, 0.5), (2.0, 0.0), (3.0, 0.1), (4.0, 0.05)],
])
def test_fit_rejects_short_or_nonpositive_series(series):
    with pytest.raises(DomainError):
        fit_decay_rate(series)


def test_decay_threshold_at_small_gamma_approaches_the_initial_infimum():
    params = make_params(gamma=1e-6)

    assert compute_F_e2_star(params, 0.5, SQRT2).value == pytest.approx(0.5, abs=1e-5)
    assert compute_F_e2_star(params, 2.0, SQRT2).value == pytest.approx(1.0, abs=1e-5)


def test_decay_threshold_for_the_default_run():
    threshold = compute_F_e2_star(make_params(gamma=0.05), 0.5, SQRT2)

    assert threshold.value == pytest.approx(0.388, abs=1e-3)
    assert 0.05 < threshold.gamma_star_prime < compute_gamma_star(1.0, 1.0, 1.0, SQRT2).gamma_star


def test_decay_threshold_is_the_first_zero_of_its_function():
    threshold = compute_F_e2_star(make_params(gamma=0.1, g=2.0), 0.8, 1.7)
    scan = np.arange(0.0, 1.0, 1e-6)
    values = np.minimum(threshold.function(scan), 1.0 - scan)
    first_zero = scan[np.argmax(values <= 0)]

    assert threshold.gamma_star_prime == pytest.approx(first_zero, abs=1e-5)


def test_decay_threshold_needs_a_positive_infimum():
    with pytest.raises(DomainError):
        compute_F_e2_star(make_params(), 0.0, SQRT2)


def test_inequality_check_margin_and_slack():
    check = InequalityCheck.of("a <= b", 1.0, 2.0)
    assert check.passed
    assert check.margin == 1.0

    check = InequalityCheck.of("a <= b", 2.0, 1.0, slack=1.5)
    assert check.passed
    assert check.to_dict()["margin"] == -1.0
    assert not InequalityCheck.of("a <= b", 2.0, 1.0).passed


def test_report_extension_keeps_the_first_violation():
    report = VerificationReport(title="first", first_violation={"check": "a"})
    report.extend(VerificationReport(
        title="second", checks=[InequalityCheck.of("b", 2.0, 1.0)],
        first_violation={"check": "b"}
    ))

    assert report.first_violation == {"check": "a"}
    assert not report.passed
    assert report.to_dict()["checks"][0]["pass"] is False


def test_convergence_check_refuses_above_the_threshold():
    grid = interval_grid(21)
    params = make_params(gamma=1.0)
    constants = uniform_bound_constants(params, grid, cosine_density(grid),
                                        trace_constant=SQRT2, gn_constant=1.0)

    report = check_convergence_theorem(TrajectoryRecord(), None, params, constants)

    assert report.refused
    assert not report.passed
    assert report.checks[0].name == "precondition gamma < gamma*'"


def test_steady_bounds_report_passes_for_a_converged_pair():
    grid = interval_grid(41)
    params = make_params(gamma=0.5)

    report = check_steady_bounds(fixed_point_steady(params, grid), params)

    assert report.passed
    assert len(report.checks) == 4
    assert render_summary(report).startswith("steady-state bounds: PASS\n")


def test_steady_bounds_report_flags_an_out_of_bounds_pair():
    grid = interval_grid(11)
    params = make_params(gamma=0.5)
    V = ScalarField.constant(grid, 0.1)
    U = ScalarField.constant(grid, 5.0)
    pair = SteadyStatePair(U=U, V=V, W=U, iterations=1, final_update=0.0)

    report = check_steady_bounds(pair, params)

    assert not report.passed
    assert "[FAIL] U <= (lambda/mu) e^V" in render_summary(report)


def test_trajectory_bounds_hold_on_a_short_run():
    grid = interval_grid(41)
    params = make_params(gamma=0.2)
    u0 = cosine_density(grid)
    trajectory = simulate(u0, params, 0.5, 0.01, grid, sample_every=0.1)
    constants = uniform_bound_constants(params, grid, u0, trace_constant=SQRT2, gn_constant=1.0)

    report = check_trajectory_bounds(trajectory, params, constants)

    assert report.passed, render_summary(report)
    assert report.first_violation is None
    assert math.isfinite(report.checks[-1].margin)


def test_strict_inequality_check_fails_on_equality():
    assert InequalityCheck.of("a <= b", 0.0, 0.0).passed
    assert not InequalityCheck.of("a < b", 0.0, 0.0, strict=True).passed
    assert InequalityCheck.of("a < b", 0.0, 0.0, slack=1e-6, strict=True).passed


def test_steady_bounds_report_flags_a_signal_touching_zero():
    grid = interval_grid(11)
    params = make_params(gamma=0.5)
    V = ScalarField(grid, np.linspace(0.0, 0.1, 11))
    W = ScalarField.constant(grid, math.exp(-0.25))
    pair = SteadyStatePair(U=ScalarField(grid, W.values * np.exp(V.values)), V=V, W=W,
                           iterations=1, final_update=0.0)

    report = check_steady_bounds(pair, params)

    assert [check.name for check in report.checks if not check.passed] == ["V > 0"]


def test_trajectory_bounds_flag_a_density_touching_zero():
    grid = interval_grid(21)
    params = make_params(gamma=0.2)
    u0 = cosine_density(grid)
    constants = uniform_bound_constants(params, grid, u0, trace_constant=SQRT2, gn_constant=1.0)
    trajectory = TrajectoryRecord(l1_bound=2.0, sub_solution_tolerance=1e-3, samples=[
        TrajectorySample(t=t, l1_u=1.0, l2_u=1.0, linf_u=1.5, min_u=min_u, min_v=0.1,
                         max_v=0.15, y_sub=0.0)
        for t, min_u in ((0.0, 0.5), (0.1, 0.0), (0.2, 0.5))
    ])

    report = check_trajectory_bounds(trajectory, params, constants)

    assert not report.passed
    assert report.first_violation == {"check": "u > 0", "t": 0.1, "lhs": 0.0, "rhs": 0.0}
    assert [check.passed for check in report.checks][:3] == [False, True, True]
