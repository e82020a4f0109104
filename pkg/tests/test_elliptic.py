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
from scipy import sparse

from chemolab.elliptic import (
    density_equations, newton_solve, signal_equations, solve_density_steady, solve_signal
)
from chemolab.exceptions import BranchError, DivergenceError, PreconditionError
from chemolab.mesh import ScalarField
from chemolab.oracle import shoot_signal_1d
from chemolab.params import NewtonConfig
from tests.common import cosine_density, interval_grid, make_params, square_grid


def central_difference_jacobian(residual, x, delta=1e-6):
    columns = []
    for index in range(x.size):
        shift = np.zeros_like(x)
        shift[index] = delta
        columns.append((residual(x + shift) - residual(x - shift)) / (2.0 * delta))
    return np.column_stack(columns)


def test_newton_solves_affine_problems_in_one_iteration():
    grid = interval_grid(5)
    target = np.linspace(1.0, 2.0, 5)
    result = newton_solve(
        lambda x: 2.0 * (x - target), lambda x: 2.0 * sparse.identity(x.size),
        ScalarField.constant(grid, 0.0), NewtonConfig()
    )

    assert result.iterations == 1
    np.testing.assert_allclose(result.field.values, target)


def test_newton_converges_quadratically():
    grid = interval_grid(3)
    result = newton_solve(
        lambda x: x ** 2 - 4.0, lambda x: sparse.diags(2.0 * x),
        ScalarField.constant(grid, 3.0), NewtonConfig()
    )
    history = result.residual_history

    np.testing.assert_allclose(result.field.values, 2.0)
    for previous, current in zip(history, history[1:]):
        if previous > 1e-6:
            assert current <= 0.1 * previous ** 2 + 1e-14


def test_newton_reports_its_history_on_failure():
    grid = interval_grid(3)
    # an overestimated Jacobian only shrinks the residual by 10% per step
    with pytest.raises(DivergenceError) as error:
        newton_solve(
            lambda x: x - 1.0, lambda x: 10.0 * sparse.identity(x.size),
            ScalarField.constant(grid, 0.0), NewtonConfig(max_iter=5)
        )

    assert "residual_history" in error.value.additional_context
    assert error.value.additional_context["last_iterate"].shape == (3,)


def test_signal_jacobian_matches_central_differences():
    grid = interval_grid(21)
    rng = np.random.default_rng(7)
    W = ScalarField(grid, rng.uniform(0.2, 2.0, grid.node_count))
    residual, jacobian = signal_equations(W, make_params(gamma=1.0), grid)
    V = rng.uniform(0.0, 1.0, grid.node_count)

    analytic = jacobian(V).toarray()
    numeric = central_difference_jacobian(residual, V)

    np.testing.assert_allclose(numeric, analytic, rtol=1e-6, atol=1e-6 * np.abs(analytic).max())


def test_density_jacobian_matches_central_differences():
    grid = interval_grid(21)
    rng = np.random.default_rng(11)
    V = ScalarField(grid, rng.uniform(0.0, 0.5, grid.node_count))
    residual, jacobian = density_equations(V, make_params(), grid)
    W = rng.uniform(0.5, 1.5, grid.node_count)

    analytic = jacobian(W).toarray()
    numeric = central_difference_jacobian(residual, W)

    np.testing.assert_allclose(numeric, analytic, rtol=1e-6, atol=1e-6 * np.abs(analytic).max())


def test_signal_of_zero_density_is_the_ambient_level():
    grid = interval_grid(51)
    V = solve_signal(ScalarField.constant(grid, 0.0), make_params(gamma=0.3), grid)

    np.testing.assert_array_equal(V.values, 0.3)


@pytest.mark.parametrize("grid", [interval_grid(101), square_grid(15)])
def test_signal_stays_between_zero_and_gamma(grid):
    rng = np.random.default_rng(5)
    W = ScalarField(grid, rng.uniform(0.0, 5.0, grid.node_count))

    V = solve_signal(W, make_params(gamma=0.8), grid)

    assert V.min() >= 0.0
    assert V.max() <= 0.8
    assert V.min() < 0.8


def test_signal_of_symmetric_density_is_symmetric():
    grid = interval_grid(101)
    W = ScalarField.from_function(grid, lambda x: 1.0 + (x - 0.5) ** 2)

    V = solve_signal(W, make_params(gamma=0.5), grid)

    np.testing.assert_allclose(V.values, V.values[::-1], atol=1e-10)
    assert V.values[50] == pytest.approx(V.min(), abs=1e-12)


def test_signal_of_unit_density_matches_the_shooting_oracle():
    grid = interval_grid(801)
    params = make_params(gamma=1.0)
    W = ScalarField.constant(grid, 1.0)

    V = solve_signal(W, params, grid)
    profile = shoot_signal_1d(1.0, params, tol=1e-11, x=grid.axes[0])

    assert np.max(np.abs(V.values - profile.V)) <= 1e-6


def test_signal_does_not_depend_on_the_newton_starting_point():
    grid = interval_grid(201)
    params = make_params(gamma=1.0)
    W = cosine_density(grid)

    from_below = solve_signal(W, params, grid, initial=ScalarField.constant(grid, 0.0))
    from_above = solve_signal(W, params, grid, initial=ScalarField.constant(grid, 1.0))

    assert np.max(np.abs(from_below.values - from_above.values)) <= 1e-9


def test_signal_depends_continuously_on_the_density():
    grid = interval_grid(101)
    params = make_params(gamma=1.0)
    W = cosine_density(grid)
    V = solve_signal(W, params, grid)

    distances = [
        np.max(np.abs(solve_signal(ScalarField(grid, W.values + shift), params, grid).values
                      - V.values))
        for shift in (1e-1, 1e-2, 1e-3)
    ]

    assert distances[0] > distances[1] > distances[2] > 0.0
    assert distances[2] <= 1e-3


def test_signal_increases_with_the_ambient_level():
    grid = interval_grid(101)
    W = cosine_density(grid)

    signals = [solve_signal(W, make_params(gamma=gamma), grid).values for gamma in (0.25, 0.5, 1.0)]

    assert np.all(signals[0] < signals[1])
    assert np.all(signals[1] < signals[2])


def test_signal_rejects_negative_density():
    grid = interval_grid(11)
    W = ScalarField(grid, np.linspace(-1.0, 1.0, 11))

    with pytest.raises(PreconditionError):
        solve_signal(W, make_params(), grid)


def test_density_of_constant_signal_is_the_shifted_carrying_capacity():
    grid = interval_grid(51)
    params = make_params(lambda_=2.0, mu=0.5)

    W = solve_density_steady(ScalarField.constant(grid, 0.4), params, grid)

    np.testing.assert_allclose(W.values, 4.0 * math.exp(-0.4))


def test_density_stays_within_its_a_priori_bounds():
    grid = interval_grid(101)
    params = make_params(gamma=1.0)
    V = ScalarField.from_function(grid, lambda x: 0.5 + 0.4 * np.cos(2.0 * np.pi * x))

    W = solve_density_steady(V, params, grid)

    assert W.min() >= math.exp(-0.9) - 1e-8
    assert W.max() <= math.exp(-0.1) + 1e-8


def test_density_from_zero_initial_guess_hits_the_trivial_branch():
    grid = interval_grid(21)

    with pytest.raises(BranchError):
        solve_density_steady(
            ScalarField.constant(grid, 0.2), make_params(), grid,
            initial=ScalarField.constant(grid, 0.0)
        )
