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
import logging
import math

import numpy as np
import pytest

from chemolab.analysis import (
    check_convergence_theorem, check_steady_bounds, check_trajectory_bounds,
    compute_F_e2_star, fit_decay_rate, render_summary
)
from chemolab.cli import run_cli
from chemolab.enum import ExitCode
from chemolab.evolve import simulate, uniform_bound_constants
from chemolab.mesh import (
    ScalarField, check_gn_inequality, check_trace_inequality, estimate_gn_constant,
    estimate_trace_constant
)
from chemolab.oracle import compare_with_fields
from chemolab.steady import compute_gamma_star, fixed_point_steady, uniqueness_sweep
from tests.common import (
    DEFAULT_CONFIG, cosine_density, frozen_oracle, interval_grid, make_params, observed_order
)


@pytest.fixture(autouse=True)
def detach_cli_log_handler():
    yield
    package_logger = logging.getLogger("chemolab")
    for handler in list(package_logger.handlers):
        if getattr(handler, "chemolab_cli", False):
            package_logger.removeHandler(handler)
    package_logger.setLevel(logging.NOTSET)


@pytest.fixture(scope="module")
def default_run():
    """The shipped scenario: gamma = 0.05, u0 = 1 + 0.5 cos(pi x), t in [0, 10]."""
    grid = interval_grid(201)
    params = make_params(gamma=0.05)
    u0 = cosine_density(grid)
    pair = fixed_point_steady(params, grid)
    trajectory = simulate(u0, params, 10.0, 1e-3, grid, sample_every=0.1, steady_ref=pair)
    constants = uniform_bound_constants(params, grid, u0)
    return grid, params, pair, trajectory, constants


def test_steady_state_bounds_at_moderate_gamma():
    params = make_params(gamma=0.5, fp_max_iter=200)

    pair = fixed_point_steady(params, interval_grid(201))

    assert pair.iterations <= 200
    assert pair.final_update <= 1e-10 * params.carrying_capacity * 1.01
    report = check_steady_bounds(pair, params, slack=1e-6)
    assert report.passed, render_summary(report)


def test_grid_steady_state_agrees_with_the_frozen_oracle():
    profile, record = frozen_oracle("coupled_steady_gamma_0.5")
    params = make_params(gamma=record["parameters"]["gamma"])
    resolutions = [101, 201, 401]
    errors = []
    for resolution in resolutions:
        pair = fixed_point_steady(params, interval_grid(resolution))
        errors.append(max(compare_with_fields(profile, {"U": pair.U, "V": pair.V}).values()))

    assert errors[-1] <= record["agreement_tol"]
    assert observed_order(errors, resolutions) == pytest.approx(2.0, abs=0.3)


def test_steady_state_is_unique_below_the_threshold():
    params = make_params(gamma=0.1)

    report = uniqueness_sweep(params, interval_grid(101), 10, seed=0)

    assert params.gamma < report.gamma_star
    assert report.converged == list(range(10))
    assert report.max_distance <= 1e-6


def test_positivity_and_sub_solution_along_the_default_run(default_run):
    _, params, _, trajectory, constants = default_run

    report = check_trajectory_bounds(trajectory, params, constants)

    assert report.passed, render_summary(report)
    assert np.all(trajectory.column("min_u") > 0)
    assert np.all(trajectory.column("max_v") < params.gamma)
    assert trajectory.times[-1] == pytest.approx(10.0)


def test_l1_bound_when_starting_above_carrying_capacity():
    grid = interval_grid(201)
    params = make_params(gamma=0.05)
    u0 = ScalarField.constant(grid, 2.0)

    trajectory = simulate(u0, params, 2.0, 1e-3, grid, sample_every=0.1)

    assert trajectory.l1_bound == pytest.approx(2.0)
    assert np.all(trajectory.column("l1_u") <= 2.0 * (1.0 + 1e-6))
    constants = uniform_bound_constants(params, grid, u0)
    assert trajectory.column("linf_u").max() <= constants.c5s


def test_uniform_bound_holds_along_the_default_run(default_run):
    _, _, _, trajectory, constants = default_run

    assert trajectory.column("linf_u").max() <= constants.c5s
    assert trajectory.column("l1_u").max() <= trajectory.l1_bound * (1.0 + 1e-6)


def test_exponential_convergence_below_the_decay_threshold(default_run):
    _, params, pair, trajectory, constants = default_run
    rate = params.mu * constants.F_e2_star_at_gamma

    report = check_convergence_theorem(trajectory, pair, params, constants)

    assert params.gamma < constants.gamma_star_prime
    assert report.passed, render_summary(report)
    fit = report.values["l2_diff_u_fit"]
    assert fit["rate"] >= rate
    assert fit["r_squared"] >= 0.98
    window = fit["window"]
    series = list(zip(trajectory.times, trajectory.column("l2_diff_u")))
    assert fit_decay_rate(series, tuple(window)).rate == pytest.approx(fit["rate"])


def test_steady_state_is_invariant_under_the_evolution():
    grid = interval_grid(101)
    params = make_params(gamma=0.5)
    pair = fixed_point_steady(params, grid)

    trajectory = simulate(pair.U, params, 1.0, 1e-3, grid, sample_every=0.1,
                          steady_ref=pair, enforce_monitors=False)

    assert max(trajectory.linf_diff_u) <= 5e-3


def test_small_density_grows_away_from_the_trivial_state():
    grid = interval_grid(51)
    params = make_params(gamma=0.05)

    trajectory = simulate(ScalarField.constant(grid, 1e-3), params, 1.0, 1e-2, grid)

    assert trajectory.column("l1_u")[-1] > 1e-3 * math.exp(0.8)


def test_embedding_inequalities_hold_for_seeded_random_fields():
    grid = interval_grid(101)
    trace_constant = estimate_trace_constant(grid)
    gn_constant = estimate_gn_constant(grid)
    rng = np.random.default_rng(2026)
    x = grid.axes[0]
    violations = []
    for index in range(100):
        noise = rng.uniform(0.0, 1.0, grid.node_count)
        modes = rng.normal(size=4)
        smooth = 2.0 + sum(a * np.cos((k + 1) * np.pi * x) for k, a in enumerate(modes)) / 4.0
        values = noise if index % 2 else np.abs(smooth)
        field = ScalarField(grid, values)
        for eps in (0.25, 0.5):
            for name, (lhs, rhs) in (("trace", check_trace_inequality(field, eps, trace_constant)),
                                     ("gn", check_gn_inequality(field, eps, gn_constant))):
                if lhs > rhs:
                    violations.append((index, eps, name))

    assert violations == []


def test_thresholds_are_consistent_with_their_defining_functions():
    threshold = compute_gamma_star(1.0, 1.0, 1.0, math.sqrt(2.0))
    scan = np.arange(0.0, 2.0, 1e-6)
    first_zero = scan[np.argmax(np.minimum(threshold.F1(scan), threshold.F2(scan)) <= 0)]

    assert threshold.gamma_star == pytest.approx(first_zero, abs=1e-5)
    assert threshold.F2(1e-6) == pytest.approx(1.0, rel=1e-3)
    decay = compute_F_e2_star(make_params(gamma=1e-6), 0.5, math.sqrt(2.0))
    assert decay.value == pytest.approx(0.5, rel=1e-3)


def test_verify_on_the_shipped_configuration_passes(tmp_path):
    assert run_cli(["verify", "-c", DEFAULT_CONFIG, "-o", str(tmp_path)]) == ExitCode.SUCCESS
    assert (tmp_path / "verify_summary.txt").read_text().startswith("verify: PASS")


def test_verify_reports_are_byte_identical_across_runs(tmp_path):
    settings = ["--set", "resolution=51", "--set", "t_end=2", "--set", "dt=0.01"]
    for name in ("first", "second"):
        run_cli(["verify", "-c", DEFAULT_CONFIG, "-o", str(tmp_path / name)] + settings)

    first = (tmp_path / "first" / "verify_report.json").read_bytes()
    second = (tmp_path / "second" / "verify_report.json").read_bytes()
    assert first == second
    assert (tmp_path / "first" / "constants.json").read_bytes() \
        == (tmp_path / "second" / "constants.json").read_bytes()
