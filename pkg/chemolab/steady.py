"""
Steady states of the chemotaxis-consumption-growth system.

A steady state (U, V) is built through the change of variables U = W e^V as
a fixed point of T[W] = W[V[W]] on the set
X = {W : e^(-gamma) lambda/mu <= W <= lambda/mu}, alternating the two
elliptic subproblems of :mod:`chemolab.elliptic`.


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

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np

from chemolab.constants import (
    FIXED_POINT_SET_SLACK, GAMMA_BISECTION_TOL, SIGNAL_BOUND_SLACK
)
from chemolab.elliptic import (
    density_equations, signal_equations, solve_density_steady, solve_signal
)
from chemolab.exceptions import (
    ChemolabError, ConfigurationError, InvariantViolationError, NonConvergenceError,
    PreconditionError
)
from chemolab.mesh import (
    Grid, ScalarField, estimate_trace_constant, gradient_energy, stiffness_form,
    trace_epsilon_constant
)
from chemolab.params import ModelParams
from chemolab.workers import run_jobs

logger = logging.getLogger(__name__)


@dataclass
class SteadyStatePair:
    """
    Converged steady state with its fixed-point diagnostics.

    Attributes:
        U: density, U = W e^V.
        V: signal.
        W: transformed density.
        iterations: fixed-point iterations performed.
        final_update: last ||W_(k+1) - W_k||_inf.
        residual_report: residuals of both subproblems at the returned state.
        update_history: every fixed-point update norm.
    """
    U: ScalarField
    V: ScalarField
    W: ScalarField
    iterations: int
    final_update: float
    residual_report: Dict[str, float] = field(default_factory=dict)
    update_history: List[float] = field(default_factory=list)

    def bound_violations(self, params: ModelParams) -> Dict[str, float]:
        """
        Largest violation of each steady-state bound (zero when satisfied):
        (lambda/mu) e^(V-gamma) <= U <= (lambda/mu) e^V and 0 < V < gamma.
        """
        capacity, gamma = params.carrying_capacity, params.gamma
        u, v = self.U.values, self.V.values
        return {
            "U_lower": float(np.max(capacity * np.exp(v - gamma) - u, initial=0.0)),
            "U_upper": float(np.max(u - capacity * np.exp(v), initial=0.0)),
            "V_lower": float(np.max(-v, initial=0.0)),
            "V_upper": float(np.max(v - gamma, initial=0.0)),
        }

    def to_dict(self) -> dict:
        """Scalar summary for reports."""
        return {
            "iterations": self.iterations,
            "final_update": self.final_update,
            "min_U": self.U.min(), "max_U": self.U.max(),
            "min_V": self.V.min(), "max_V": self.V.max(),
            "residuals": dict(self.residual_report),
        }


def _check_in_fixed_point_set(W: ScalarField, params: ModelParams, error_class, iteration: int):
    capacity = params.carrying_capacity
    lower = math.exp(-params.gamma) * capacity
    slack = FIXED_POINT_SET_SLACK * capacity
    if W.min() < lower - slack or W.max() > capacity + slack:
        raise error_class(
            f"Fixed-point iterate {iteration} left the invariant set X.",
            additional_context={
                "min_W": W.min(), "max_W": W.max(), "lower": lower, "upper": capacity
            }
        )


def transformed_residuals(pair: SteadyStatePair, params: ModelParams, grid: Grid) -> Dict[str, float]:
    """Max-norm residuals of the signal and density subproblems at a steady state."""
    signal_residual, _ = signal_equations(pair.W, params, grid)
    density_residual, _ = density_equations(pair.V, params, grid)
    return {
        "signal": float(np.max(np.abs(signal_residual(pair.V.values)))),
        "density": float(np.max(np.abs(density_residual(pair.W.values)))),
    }


def fixed_point_steady(
        params: ModelParams, grid: Grid, init_W: Optional[ScalarField] = None
) -> SteadyStatePair:
    """
    Iterates W_(k+1) = (1 - omega) W_k + omega W[V[W_k]] from ``init_W``
    (default W = lambda/mu) until
    ||W_(k+1) - W_k||_inf <= fp_tol ||W_k||_inf.

    :raises PreconditionError: if ``init_W`` is not in X.
    :raises InvariantViolationError: if an iterate leaves X.
    :raises NonConvergenceError: after fp_max_iter iterations; the context
        carries the update history.
    """
    capacity = params.carrying_capacity
    W = init_W if init_W is not None else ScalarField.constant(grid, capacity)
    _check_in_fixed_point_set(W, params, PreconditionError, 0)

    omega = params.relaxation
    V = None
    history: List[float] = []
    for iteration in range(1, params.fp_max_iter + 1):
        V = solve_signal(W, params, grid, initial=V)
        W_next = solve_density_steady(V, params, grid, initial=W)
        if omega < 1.0:
            W_next = W_next.with_values(omega * W_next.values + (1.0 - omega) * W.values)
        _check_in_fixed_point_set(W_next, params, InvariantViolationError, iteration)

        update = float(np.max(np.abs(W_next.values - W.values)))
        history.append(update)
        converged = update <= params.fp_tol * float(np.max(np.abs(W.values)))
        W = W_next
        logger.debug(
            "Fixed-point iteration %d: update %.3e", iteration, update,
            extra={"category": "STEADY", "event": "ITERATION"}
        )
        if converged:
            break
    else:
        raise NonConvergenceError(
            f"Fixed-point iteration did not converge within {params.fp_max_iter} iterations.",
            additional_context={"update_history": history}
        )

    V = solve_signal(W, params, grid, initial=V)
    pair = SteadyStatePair(
        U=ScalarField(grid, W.values * np.exp(V.values)), V=V, W=W,
        iterations=len(history), final_update=history[-1], update_history=history
    )
    pair.residual_report = transformed_residuals(pair, params, grid)
    pair.residual_report["fixed_point_update"] = pair.final_update

    violations = pair.bound_violations(params)
    tolerances = {
        "U_lower": FIXED_POINT_SET_SLACK * capacity, "U_upper": FIXED_POINT_SET_SLACK * capacity,
        "V_lower": SIGNAL_BOUND_SLACK, "V_upper": SIGNAL_BOUND_SLACK,
    }
    broken = {name: value for name, value in violations.items() if value > tolerances[name]}
    if broken:
        raise InvariantViolationError(
            "Steady state violates its a priori bounds; refine the grid.",
            additional_context={"violations": broken}
        )

    logger.info(
        "Steady state converged after %d iteration(s): V in [%.6g, %.6g], U in [%.6g, %.6g]",
        pair.iterations, V.min(), V.max(), pair.U.min(), pair.U.max(),
        extra={"category": "STEADY", "event": "CONVERGED"}
    )
    return pair


class GammaThreshold(NamedTuple):
    """Uniqueness threshold gamma* with the two functions defining it."""
    gamma_star: float
    F1: Callable
    F2: Callable


def bisect_decreasing_root(function: Callable[[float], float], upper: float) -> float:
    """Root of a decreasing function that is positive at 0 and nonpositive at ``upper``."""
    low, high = 0.0, upper
    while high - low > GAMMA_BISECTION_TOL:
        middle = 0.5 * (low + high)
        if function(middle) > 0:
            low = middle
        else:
            high = middle
    return 0.5 * (low + high)


def compute_gamma_star(lambda_: float, mu: float, g_sup: float, trace_constant: float) -> GammaThreshold:
    """
    Uniqueness threshold of steady states.

    F1(gamma) = 1 - gamma ||g|| / 2,
    F2(gamma) = (lambda/mu)(2 e^-gamma - 1) - gamma^2 (e^gamma / (4 lambda)) (lambda e^gamma / mu)^2
                - gamma ||g|| c1(1/2) / (2 mu),
    with c1(eps) = C_T^4 / (4 eps) + eps. Both decrease in gamma, so gamma* is
    the first zero of min(F1, F2), found by bisection on (0, 2 / ||g||).

    F1 and F2 accept scalars and numpy arrays.
    """
    for name, value in (("lambda", lambda_), ("mu", mu), ("g_sup", g_sup),
                        ("trace_constant", trace_constant)):
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value!r}")

    c1_half = trace_epsilon_constant(0.5, trace_constant)

    def F1(gamma):  # pylint: disable=invalid-name
        return 1.0 - 0.5 * gamma * g_sup

    def F2(gamma):  # pylint: disable=invalid-name
        growth = np.exp(gamma)
        return lambda_ / mu * (2.0 * np.exp(-gamma) - 1.0) \
            - gamma ** 2 * growth / (4.0 * lambda_) * (lambda_ * growth / mu) ** 2 \
            - gamma * g_sup * c1_half / (2.0 * mu)

    gamma_star = bisect_decreasing_root(lambda gamma: min(F1(gamma), F2(gamma)), 2.0 / g_sup)
    return GammaThreshold(gamma_star, F1, F2)


def difference_energy(
        v_difference: np.ndarray, u_difference: np.ndarray, params: ModelParams, grid: Grid
):
    """
    Both sides of the signal-difference energy inequality
    int_dOmega g v~^2 + ||grad v~||^2 + (lambda / 2 mu) e^-gamma ||v~||^2
        <= gamma^2 (mu / 2 lambda) e^gamma ||u~||^2
    for the signal difference v~ and density difference u~ between a state
    and a steady state.

    :return: (lhs, rhs)
    """
    g = params.g_spec.nodal_values(grid)
    weights = grid.volume_weights
    gamma, growth, crowding = params.gamma, params.lambda_, params.mu
    v_field = ScalarField(grid, v_difference)
    lhs = float(grid.boundary_weights @ (g * v_difference ** 2)) + gradient_energy(v_field) \
        + growth / (2.0 * crowding) * math.exp(-gamma) * float(weights @ v_difference ** 2)
    rhs = gamma ** 2 * crowding / (2.0 * growth) * math.exp(gamma) \
        * float(weights @ u_difference ** 2)
    return lhs, rhs


def difference_energy_bound(
        first: SteadyStatePair, second: SteadyStatePair, params: ModelParams, grid: Grid
):
    """Signal-difference energy inequality between two steady states; returns (lhs, rhs)."""
    return difference_energy(
        first.V.values - second.V.values, first.U.values - second.U.values, params, grid
    )


@dataclass
class UniquenessReport:
    """Outcome of a uniqueness sweep, ordered by initialization index."""
    gamma: float
    n_inits: int
    seed: int
    gamma_star: float
    trace_constant: float
    converged: List[int]
    failures: Dict[int, str]
    iterations: List[Optional[int]]
    distances: np.ndarray

    @property
    def max_distance(self) -> float:
        """Largest pairwise ||U_i - U_j||_inf among converged limits."""
        return float(self.distances.max()) if self.distances.size else 0.0

    def to_dict(self) -> dict:
        """JSON-compatible layout."""
        return {
            "gamma": self.gamma,
            "n_inits": self.n_inits,
            "seed": self.seed,
            "gamma_star": self.gamma_star,
            "trace_constant": self.trace_constant,
            "below_gamma_star": self.gamma < self.gamma_star,
            "converged": list(self.converged),
            "failures": {str(index): message for index, message in self.failures.items()},
            "iterations": list(self.iterations),
            "max_distance": self.max_distance,
            "distances": self.distances.tolist(),
        }


def sample_fixed_point_set(
        params: ModelParams, grid: Grid, n_samples: int, seed: int
) -> List[ScalarField]:
    """
    Seeded random fields in X: nodewise uniform on [e^-gamma lambda/mu, lambda/mu],
    then two damped Jacobi smoothing sweeps, which average neighbours and so
    stay in X.
    """
    capacity = params.carrying_capacity
    rng = np.random.default_rng(seed)
    samples = rng.uniform(
        math.exp(-params.gamma) * capacity, capacity, size=(n_samples, grid.node_count)
    )
    stiffness = stiffness_form(grid)
    diagonal = stiffness.diagonal()
    for _ in range(2):
        samples = samples - 0.5 * (stiffness @ samples.T).T / diagonal
    return [ScalarField(grid, sample) for sample in samples]


def uniqueness_sweep(
        params: ModelParams, grid: Grid, n_inits: int, seed: int,
        trace_constant: Optional[float] = None, max_workers: Optional[int] = None
) -> UniquenessReport:
    """
    Runs :func:`fixed_point_steady` from ``n_inits`` random starts in X and
    measures how far apart the limits are.

    Solver failures are collected per start instead of aborting the sweep.

    :param trace_constant: C_T used for gamma*; estimated on the grid when omitted.
    """
    if n_inits < 1:
        raise ConfigurationError(f"n_inits must be at least 1, got {n_inits}")

    starts = sample_fixed_point_set(params, grid, n_inits, seed)
    jobs = [functools.partial(fixed_point_steady, params, grid, start) for start in starts]
    outcomes = run_jobs(jobs, max_workers)

    limits, converged, failures, iterations = [], [], {}, []
    for index, outcome in enumerate(outcomes):
        if isinstance(outcome, SteadyStatePair):
            limits.append(outcome.U.values)
            converged.append(index)
            iterations.append(outcome.iterations)
        else:
            if not isinstance(outcome, ChemolabError):
                logger.error(
                    "Unexpected error in uniqueness sweep start %d: %r", index, outcome,
                    extra={"category": "STEADY", "event": "SWEEP"}
                )
            failures[index] = f"{type(outcome).__name__}: {outcome}"
            iterations.append(None)

    stacked = np.array(limits).reshape(len(limits), grid.node_count)
    distances = np.max(np.abs(stacked[:, None, :] - stacked[None, :, :]), axis=2) \
        if limits else np.zeros((0, 0))

    trace_constant = trace_constant or estimate_trace_constant(grid)
    threshold = compute_gamma_star(params.lambda_, params.mu, params.g_sup, trace_constant)
    report = UniquenessReport(
        gamma=params.gamma, n_inits=n_inits, seed=seed,
        gamma_star=threshold.gamma_star, trace_constant=trace_constant,
        converged=converged, failures=failures, iterations=iterations, distances=distances
    )
    logger.info(
        "Uniqueness sweep at gamma=%.4g: %d/%d converged, max distance %.3e (gamma*=%.4g)",
        params.gamma, len(converged), n_inits, report.max_distance, report.gamma_star,
        extra={"category": "STEADY", "event": "SWEEP"}
    )
    return report
