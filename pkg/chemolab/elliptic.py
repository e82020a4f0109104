"""
Damped Newton solver and the two stationary subproblems of the transformed
steady-state system:

* the signal problem: div(grad V) = V W e^V in Omega, d_nu V = (gamma - V) g on dOmega;
* the density problem: div(e^V grad W) + lambda W e^V - mu (W e^V)^2 = 0, d_nu W = 0.

Residuals and Jacobians are divided row-wise by the volume weights, so the
residual norm is the pointwise residual of the difference equations.


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
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import sparse

from chemolab.constants import BRANCH_THRESHOLD, DENSITY_BOUND_SLACK, SIGNAL_BOUND_SLACK
from chemolab.enum import BoundaryCondition
from chemolab.exceptions import (
    BranchError, DivergenceError, InvariantViolationError, NumericalError, PreconditionError
)
from chemolab.linops import SparseOperator, face_average, solve_linear
from chemolab.mesh import Grid, ScalarField, integrate, stiffness_form
from chemolab.params import ModelParams, NewtonConfig

logger = logging.getLogger(__name__)

ResidualFn = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], sparse.spmatrix]


@dataclass
class NewtonResult:
    """Outcome of a converged Newton iteration."""
    field: ScalarField
    iterations: int
    residual_history: List[float] = field(default_factory=list)
    step_history: List[float] = field(default_factory=list)
    damping_history: List[float] = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        """Max-norm of the residual at the returned iterate."""
        return self.residual_history[-1]


def _max_norm(vector: np.ndarray) -> float:
    if not np.all(np.isfinite(vector)):
        return float("inf")
    return float(np.max(np.abs(vector)))


def newton_solve(
        residual_fn: ResidualFn, jacobian_fn: JacobianFn, init: ScalarField, cfg: NewtonConfig
) -> NewtonResult:
    """
    Damped Newton iteration for ``residual_fn(x) = 0``.

    Stops when ||residual||_inf <= cfg.tol_residual or when a full Newton step
    has ||step||_inf <= cfg.tol_step. Otherwise the step is halved until the
    residual decreases.

    :raises DivergenceError: when the damping would drop below
        cfg.damping_min or after cfg.max_iter iterations. The additional context
        carries the last iterate and the residual history.
    """
    grid = init.grid
    x = np.array(init.values, dtype=float)
    residual = residual_fn(x)
    norm = _max_norm(residual)
    result = NewtonResult(field=init, iterations=0, residual_history=[norm])

    def failure(message: str) -> DivergenceError:
        return DivergenceError(message, additional_context={
            "last_iterate": x.copy(),
            "residual_history": list(result.residual_history),
            "step_history": list(result.step_history),
        })

    if not np.isfinite(norm):
        raise failure("Residual is not finite at the initial guess.")

    for iteration in range(1, cfg.max_iter + 1):
        if norm <= cfg.tol_residual:
            break

        jacobian = SparseOperator(grid, sparse.csr_matrix(jacobian_fn(x)), BoundaryCondition.ROBIN)
        try:
            step = solve_linear(jacobian, -residual).values
        except NumericalError as error:
            raise failure(f"Newton linear solve failed: {error.message}") from error

        step_norm = _max_norm(step)
        result.step_history.append(step_norm)
        if step_norm <= cfg.tol_step:
            x = x + step
            residual = residual_fn(x)
            norm = _max_norm(residual)
            result.residual_history.append(norm)
            result.damping_history.append(1.0)
            result.iterations = iteration
            break

        damping = 1.0
        while True:
            trial = x + damping * step
            trial_residual = residual_fn(trial)
            trial_norm = _max_norm(trial_residual)
            if trial_norm < norm or trial_norm <= cfg.tol_residual:
                break
            damping *= 0.5
            if damping < cfg.damping_min:
                raise failure(
                    f"Newton line search failed at iteration {iteration}: "
                    f"residual {norm:.3e} could not be decreased."
                )

        if damping < 1.0:
            logger.warning(
                "Damped Newton step (factor %.3g) at iteration %d", damping, iteration,
                extra={"category": "NEWTON", "event": "DAMPING"}
            )
        x, residual, norm = trial, trial_residual, trial_norm
        result.residual_history.append(norm)
        result.damping_history.append(damping)
        result.iterations = iteration
        logger.debug(
            "Newton iteration %d: residual %.3e, step %.3e", iteration, norm, step_norm,
            extra={"category": "NEWTON", "event": "ITERATION"}
        )
    else:
        if norm > cfg.tol_residual:
            raise failure(f"Newton did not converge within {cfg.max_iter} iterations.")

    result.field = ScalarField(grid, x)
    logger.debug(
        "Newton converged after %d iteration(s), residual %.3e", result.iterations, norm,
        extra={"category": "NEWTON", "event": "CONVERGED"}
    )
    return result


def signal_equations(
        W: ScalarField, params: ModelParams, grid: Grid
) -> Tuple[ResidualFn, JacobianFn]:
    """Residual and Jacobian of the discrete signal problem for a given W."""
    weights = grid.volume_weights
    g_boundary = grid.boundary_weights * params.g_spec.nodal_values(grid)
    stiffness = stiffness_form(grid)
    density = W.values
    gamma = params.gamma

    def residual(V: np.ndarray) -> np.ndarray:
        return (stiffness @ V + g_boundary * (V - gamma)) / weights \
            + density * V * np.exp(V)

    def jacobian(V: np.ndarray) -> sparse.spmatrix:
        diagonal = g_boundary + weights * density * np.exp(V) * (1.0 + V)
        return sparse.diags(1.0 / weights) @ (stiffness + sparse.diags(diagonal))

    return residual, jacobian


def density_equations(
        V: ScalarField, params: ModelParams, grid: Grid
) -> Tuple[ResidualFn, JacobianFn]:
    """Residual and Jacobian of the discrete transformed density problem for a given V."""
    weights = grid.volume_weights
    exp_v = np.exp(V.values)
    stiffness = stiffness_form(grid, face_average(grid, exp_v))
    growth, crowding = params.lambda_, params.mu

    def residual(W: np.ndarray) -> np.ndarray:
        return stiffness @ W / weights - (growth * W * exp_v - crowding * (W * exp_v) ** 2)

    def jacobian(W: np.ndarray) -> sparse.spmatrix:
        diagonal = weights * (growth * exp_v - 2.0 * crowding * W * exp_v ** 2)
        return sparse.diags(1.0 / weights) @ (stiffness - sparse.diags(diagonal))

    return residual, jacobian


def solve_signal(
        W: ScalarField, params: ModelParams, grid: Grid,
        cfg: Optional[NewtonConfig] = None, initial: Optional[ScalarField] = None
) -> ScalarField:
    """
    Solves the signal problem V[W].

    :param W: nonnegative density of the transformed system.
    :param initial: Newton starting point; V = gamma / 2 when omitted.
    :return: V with 0 <= V <= gamma.
    :raises PreconditionError: if W has negative values.
    :raises DivergenceError: if Newton fails.
    """
    cfg = cfg or params.newton_cfg
    if np.any(W.values < 0):
        raise PreconditionError(
            "Signal problem needs a nonnegative W.",
            additional_context={"min_W": W.min()}
        )
    if not np.any(W.values):
        return ScalarField.constant(grid, params.gamma)

    init = initial if initial is not None else ScalarField.constant(grid, 0.5 * params.gamma)
    residual, jacobian = signal_equations(W, params, grid)
    V = newton_solve(residual, jacobian, init, cfg).field

    slack = SIGNAL_BOUND_SLACK
    if V.min() < -slack or V.max() > params.gamma + slack:
        raise InvariantViolationError(
            "Signal left the interval [0, gamma].",
            additional_context={"min_V": V.min(), "max_V": V.max(), "gamma": params.gamma}
        )
    return V


def solve_density_steady(
        V: ScalarField, params: ModelParams, grid: Grid,
        cfg: Optional[NewtonConfig] = None, initial: Optional[ScalarField] = None
) -> ScalarField:
    """
    Solves the transformed density problem W[V].

    :param initial: Newton starting point; W = (lambda/mu) e^(-mean V) when omitted.
    :return: the positive solution, within
        [min(e^-V), max(e^-V)] * lambda / mu.
    :raises BranchError: if Newton lands on the trivial solution W = 0.
    :raises DivergenceError: if Newton fails.
    """
    cfg = cfg or params.newton_cfg
    capacity = params.carrying_capacity
    if initial is None:
        mean_v = integrate(V) / grid.domain.measure
        initial = ScalarField.constant(grid, capacity * np.exp(-mean_v))

    residual, jacobian = density_equations(V, params, grid)
    W = newton_solve(residual, jacobian, initial, cfg).field

    if W.max() < BRANCH_THRESHOLD * capacity:
        raise BranchError(
            "Density solver converged to the trivial branch W = 0; "
            "restart from a positive initial guess.",
            additional_context={"max_W": W.max()}
        )
    lower = capacity * float(np.exp(-V.values).min())
    upper = capacity * float(np.exp(-V.values).max())
    slack = DENSITY_BOUND_SLACK * capacity
    if W.min() < lower - slack or W.max() > upper + slack:
        raise InvariantViolationError(
            "Density left its a priori bounds.",
            additional_context={
                "min_W": W.min(), "max_W": W.max(), "lower": lower, "upper": upper
            }
        )
    return W
