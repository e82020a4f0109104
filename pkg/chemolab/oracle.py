"""
Independent reference solvers on an interval, used to validate the grid
solvers: shooting with a high-order adaptive ODE integrator and bracketing
or quasi-Newton root finding on the far-end boundary residuals.


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
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, root

from chemolab.constants import ORACLE_TOL
from chemolab.enum import DomainKind
from chemolab.exceptions import OracleError
from chemolab.mesh import ScalarField
from chemolab.params import ModelParams

logger = logging.getLogger(__name__)

Profile = Union[float, Callable[[np.ndarray], np.ndarray]]

DEFAULT_NODES = 1001


@dataclass(frozen=True)
class OracleProfile:
    """Reference profiles sampled at the points x."""
    x: np.ndarray
    U: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None


def as_profile(data: Union[Profile, ScalarField]) -> Callable[[np.ndarray], np.ndarray]:
    """
    Turns a constant, a callable of x or a 1D field (linearly interpolated)
    into a vectorized function of x.
    """
    if isinstance(data, ScalarField):
        nodes, values = data.grid.axes[0], data.values
        return lambda x: np.interp(x, nodes, values)
    if callable(data):
        return data
    constant = float(data)
    return lambda x: np.full_like(np.asarray(x, dtype=float), constant)


def _interval(params: ModelParams):
    domain = params.domain_spec
    if domain.kind is not DomainKind.INTERVAL:
        raise OracleError(f"Shooting oracles need an interval domain, got {domain.kind.value}")
    (lower,), (upper,) = domain.lower, domain.upper
    g_left, g_right = params.g_spec.evaluate(np.array([0.0, 1.0]))
    return lower, upper, float(g_left), float(g_right)


def _sample_points(lower: float, upper: float, x: Optional[np.ndarray]) -> np.ndarray:
    if x is None:
        return np.linspace(lower, upper, DEFAULT_NODES)
    return np.asarray(x, dtype=float)


def _integrate(rhs, initial, lower, upper, tol, x=None):
    solution = solve_ivp(
        rhs, (lower, upper), initial, method="DOP853", t_eval=x,
        rtol=max(tol / 10.0, 1e-13), atol=max(tol / 100.0, 1e-14)
    )
    if not solution.success:
        raise OracleError(
            f"ODE integration failed: {solution.message}",
            additional_context={"initial": list(initial)}
        )
    return solution


def _bracketed_root(residual: Callable[[float], float], low: float, high: float, tol: float,
                    what: str) -> float:
    if high - low <= tol:
        return 0.5 * (low + high)
    r_low, r_high = residual(low), residual(high)
    if r_low == 0:
        return low
    if r_high == 0:
        return high
    if np.sign(r_low) == np.sign(r_high) or not (math.isfinite(r_low) and math.isfinite(r_high)):
        raise OracleError(
            f"Could not bracket the {what} shooting parameter; widen the bracket.",
            additional_context={"bracket": (low, high), "residuals": (r_low, r_high)}
        )
    return brentq(residual, low, high, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)


def shoot_signal_1d(W_profile: Union[Profile, ScalarField], params: ModelParams,
                    tol: float = ORACLE_TOL, x: Optional[np.ndarray] = None) -> OracleProfile:
    """
    Solves V'' = V W e^V with -V'(a) = (gamma - V(a)) g(a), V'(b) = (gamma - V(b)) g(b)
    by shooting on V(a) in [0, gamma].

    :return: profile with V (and W) sampled at x.
    :raises OracleError: if the shooting parameter cannot be bracketed.
    """
    lower, upper, g_left, g_right = _interval(params)
    gamma = params.gamma
    density = as_profile(W_profile)

    def rhs(position, state):
        value, slope = state
        return [slope, value * float(density(position)) * math.exp(value)]

    def initial(start):
        return [start, -(gamma - start) * g_left]

    def residual(start):
        end = _integrate(rhs, initial(start), lower, upper, tol).y[:, -1]
        return end[1] - (gamma - end[0]) * g_right

    start = _bracketed_root(residual, 0.0, gamma, tol, "signal")
    points = _sample_points(lower, upper, x)
    solution = _integrate(rhs, initial(start), lower, upper, tol, points)
    logger.debug(
        "Signal oracle: V(a) = %.12g", start, extra={"category": "ORACLE", "event": "SIGNAL"}
    )
    return OracleProfile(x=points, V=solution.y[0], W=density(points))


def shoot_density_1d(V_profile: Union[Profile, ScalarField], params: ModelParams,
                     tol: float = ORACLE_TOL, x: Optional[np.ndarray] = None) -> OracleProfile:
    """
    Solves (e^V W')' + lambda W e^V - mu (W e^V)^2 = 0 with W'(a) = W'(b) = 0
    by shooting on W(a) within (lambda/mu) [min e^-V, max e^-V].

    :return: profile with W, V and U = W e^V sampled at x.
    :raises OracleError: if the shooting parameter cannot be bracketed.
    """
    lower, upper, _, _ = _interval(params)
    growth, crowding = params.lambda_, params.mu
    signal = as_profile(V_profile)

    def rhs(position, state):
        density, flux = state
        scale = math.exp(float(signal(position)))
        return [flux / scale, -growth * density * scale + crowding * (density * scale) ** 2]

    def residual(start):
        return _integrate(rhs, [start, 0.0], lower, upper, tol).y[1, -1]

    probe = signal(np.linspace(lower, upper, DEFAULT_NODES))
    capacity = growth / crowding
    start = _bracketed_root(
        residual, capacity * float(np.exp(-probe).min()), capacity * float(np.exp(-probe).max()),
        tol, "density"
    )
    points = _sample_points(lower, upper, x)
    solution = _integrate(rhs, [start, 0.0], lower, upper, tol, points)
    V = signal(points)
    return OracleProfile(x=points, U=solution.y[0] * np.exp(V), V=V, W=solution.y[0])


# pylint: disable=too-many-locals
def shoot_coupled_steady_1d(params: ModelParams, tol: float = ORACLE_TOL,
                            x: Optional[np.ndarray] = None) -> OracleProfile:
    """
    Solves the coupled steady system for (W, e^V W', V, V') on an interval:
    Neumann ends for W, Robin ends for V, by two-parameter shooting on
    (W(a), V(a)). The far-end residuals are zeroed with a hybrid Powell
    method; nested bisection is the fallback.

    :return: profile with U = W e^V, V and W sampled at x.
    :raises OracleError: if the residuals stay above tol.
    """
    lower, upper, g_left, g_right = _interval(params)
    growth, crowding, gamma = params.lambda_, params.mu, params.gamma
    capacity = growth / crowding

    def rhs(_, state):
        density, flux, value, slope = state
        scale = math.exp(value)
        return [
            flux / scale,
            -growth * density * scale + crowding * (density * scale) ** 2,
            slope,
            value * density * scale,
        ]

    def initial(start):
        density, value = start
        return [density, 0.0, value, -(gamma - value) * g_left]

    def residuals(start):
        end = _integrate(rhs, initial(start), lower, upper, tol).y[:, -1]
        return np.array([end[1], end[3] - (gamma - end[2]) * g_right])

    first_guess = shoot_signal_1d(capacity * math.exp(-0.5 * gamma), params, tol).V[0]
    guess = np.array([capacity * math.exp(-first_guess), first_guess])
    solution = root(residuals, guess, method="hybr", options={"xtol": 0.01 * tol})
    start = solution.x
    misfit = float(np.max(np.abs(residuals(start))))

    if not misfit <= tol:
        logger.warning(
            "Coupled oracle: Powell iteration stalled (%s), falling back to nested bisection",
            solution.message, extra={"category": "ORACLE", "event": "FALLBACK"}
        )
        start = _nested_bisection(residuals, capacity, gamma, tol)
        misfit = float(np.max(np.abs(residuals(start))))
        if not misfit <= tol:
            raise OracleError(
                "Coupled shooting residual above tolerance.",
                additional_context={"start": list(start), "residual": misfit}
            )

    points = _sample_points(lower, upper, x)
    profile = _integrate(rhs, initial(start), lower, upper, tol, points).y
    logger.info(
        "Coupled oracle converged: W(a) = %.12g, V(a) = %.12g (residual %.2e)",
        start[0], start[1], misfit, extra={"category": "ORACLE", "event": "COUPLED"}
    )
    return OracleProfile(
        x=points, U=profile[0] * np.exp(profile[2]), V=profile[2], W=profile[0]
    )


def _nested_bisection(residuals, capacity: float, gamma: float, tol: float) -> np.ndarray:
    """Outer bisection on V(a), inner bisection on W(a) zeroing the W flux residual."""
    low_w, high_w = capacity * math.exp(-gamma), capacity

    def inner(value):
        return _bracketed_root(
            lambda density: residuals((density, value))[0], low_w, high_w, tol, "coupled density"
        )

    def outer(value):
        return residuals((inner(value), value))[1]

    value = _bracketed_root(outer, 0.0, gamma, tol, "coupled signal")
    return np.array([inner(value), value])


def relative_max_error(reference: np.ndarray, values: np.ndarray) -> float:
    """||values - reference||_inf / ||reference||_inf."""
    reference = np.asarray(reference, dtype=float)
    scale = float(np.max(np.abs(reference)))
    return float(np.max(np.abs(np.asarray(values) - reference))) / (scale if scale > 0 else 1.0)


def compare_with_fields(profile: OracleProfile, fields: Dict[str, ScalarField]) -> Dict[str, float]:
    """
    Relative max-norm distance between oracle quantities and grid fields on
    an interval, the oracle being interpolated to the grid nodes.
    """
    errors = {}
    for name, grid_field in fields.items():
        reference = getattr(profile, name)
        if reference is None:
            continue
        nodes = grid_field.grid.axes[0]
        errors[name] = relative_max_error(np.interp(nodes, profile.x, reference), grid_field.values)
    return errors
