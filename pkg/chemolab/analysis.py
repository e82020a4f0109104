"""
Constants of the convergence theory, decay-rate extraction and verification
reports tying trajectories and steady states to the a priori bounds.


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
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from jinja2 import BaseLoader, Environment

from chemolab.constants import (
    CONVERGENCE_TOL, FIT_MIN_SAMPLES, FIT_TRANSIENT_FRACTION, INTERPOLATION_EXPONENTS,
    L1_RELATIVE_TOL, VERIFICATION_SUMMARY_TEMPLATE
)
from chemolab.exceptions import DomainError, PreconditionError
from chemolab.mesh import lp_norm, second_difference_norm, trace_epsilon_constant
from chemolab.params import ModelParams
from chemolab.steady import SteadyStatePair, bisect_decreasing_root

if TYPE_CHECKING:
    from chemolab.evolve import TrajectoryRecord

logger = logging.getLogger(__name__)


# pylint: disable=too-many-instance-attributes,invalid-name
@dataclass
class ConstantsReport:
    """
    Every explicit constant of the theory for one run, with the inputs and the
    provenance of the grid-dependent embedding constants.
    """
    trace_constant: float
    gn_constant: float
    eps: float
    c1_eps: float
    c1_prime_eps: float
    gamma: float
    gamma_star: float
    F1_at_gamma: float
    F2_at_gamma: float
    F_e2_star_at_gamma: float
    gamma_star_prime: float
    c1s: float
    c2s: float
    c3s: float
    c4s: float
    c5s: float
    c6s: Dict[int, float] = field(default_factory=dict)
    inputs: Dict[str, float] = field(default_factory=dict)
    provenance: Dict[str, object] = field(default_factory=dict)

    def flags(self) -> List[str]:
        """Warnings about gamma relative to the thresholds of the theory."""
        flags = []
        if self.F1_at_gamma <= 0:
            flags.append("F1(gamma) <= 0: gamma >= 2 / ||g||_inf")
        if self.F2_at_gamma <= 0:
            flags.append("F2(gamma) <= 0")
        if self.gamma >= self.gamma_star:
            flags.append("gamma above the uniqueness threshold gamma*")
        if self.gamma >= self.gamma_star_prime:
            flags.append("gamma above the convergence threshold gamma*'")
        return flags

    def to_dict(self) -> dict:
        """JSON-compatible layout."""
        return {
            "C_T": self.trace_constant,
            "C_GN": self.gn_constant,
            "eps": self.eps,
            "c1_eps": self.c1_eps,
            "c1_prime_eps": self.c1_prime_eps,
            "gamma": self.gamma,
            "gamma_star": self.gamma_star,
            "gamma_star_prime": self.gamma_star_prime,
            "F1_at_gamma": self.F1_at_gamma,
            "F2_at_gamma": self.F2_at_gamma,
            "F_e2_star_at_gamma": self.F_e2_star_at_gamma,
            "c1s": self.c1s, "c2s": self.c2s, "c3s": self.c3s, "c4s": self.c4s, "c5s": self.c5s,
            "c6s": {str(s): value for s, value in sorted(self.c6s.items())},
            "flags": self.flags(),
            "inputs": dict(self.inputs),
            "provenance": dict(self.provenance),
        }


class DecayThreshold(NamedTuple):
    """F_e2* at gamma, the threshold gamma*' and F_e2* as a function of gamma."""
    value: float
    gamma_star_prime: float
    function: Callable


def compute_F_e2_star(params: ModelParams, inf_u0: float, trace_constant: float) -> DecayThreshold:
    """
    F_e2*(gamma) = (lambda/mu)(e^-gamma - 1) + min{inf u0, lambda/(mu + gamma)}
                   - gamma^2 (e^gamma / (4 lambda)) (lambda e^gamma / mu)^2
                   - gamma ||g|| c1(1/2) / (2 mu),
    evaluated at params.gamma, and gamma*', the first zero of
    min{F_e2*, 1 - gamma ||g|| / 2}, found by bisection.
    """  # pylint: disable=invalid-name
    if not inf_u0 > 0:
        raise DomainError(f"inf u0 must be positive, got {inf_u0}")
    growth, crowding, g_sup = params.lambda_, params.mu, params.g_sup
    c1_half = trace_epsilon_constant(0.5, trace_constant)

    def F_e2_star(gamma):  # pylint: disable=invalid-name
        scale = np.exp(gamma)
        return growth / crowding * (np.exp(-gamma) - 1.0) \
            + np.minimum(inf_u0, growth / (crowding + gamma)) \
            - gamma ** 2 * scale / (4.0 * growth) * (growth * scale / crowding) ** 2 \
            - gamma * g_sup * c1_half / (2.0 * crowding)

    gamma_star_prime = bisect_decreasing_root(
        lambda gamma: min(F_e2_star(gamma), 1.0 - 0.5 * gamma * g_sup), 2.0 / g_sup
    )
    return DecayThreshold(float(F_e2_star(params.gamma)), gamma_star_prime, F_e2_star)


class DecayFit(NamedTuple):
    """Exponential fit value ~ C e^(-rate t)."""
    rate: float
    r_squared: float


def fit_decay_rate(
        series: Sequence[Tuple[float, float]], window: Optional[Tuple[float, float]] = None
) -> DecayFit:
    """
    Least-squares fit of log(value) against t.

    :param series: (t, value) pairs.
    :param window: closed time interval restricting the fit; whole series when omitted.
    :return: decay rate (positive for decay) and coefficient of determination.
    :raises DomainError: with fewer than 5 samples in the window, or with a
        nonpositive value in it (the decay has reached its floor).
    """
    data = np.asarray(series, dtype=float).reshape(-1, 2)
    times, values = data[:, 0], data[:, 1]
    if window is not None:
        inside = (times >= window[0]) & (times <= window[1])
        times, values = times[inside], values[inside]
    if len(times) < FIT_MIN_SAMPLES:
        raise DomainError(
            f"Decay fit needs at least {FIT_MIN_SAMPLES} samples, got {len(times)}"
        )
    if np.any(values <= 0):
        raise DomainError("Decay fit window contains nonpositive values; shrink the window.")

    logs = np.log(values)
    slope, intercept = np.polyfit(times, logs, 1)
    residual = float(np.sum((logs - (slope * times + intercept)) ** 2))
    spread = float(np.sum((logs - logs.mean()) ** 2))
    r_squared = 1.0 if spread <= 1e-300 else 1.0 - residual / spread
    return DecayFit(float(-slope), r_squared)


@dataclass
class InequalityCheck:
    """One checked inequality lhs <= rhs; margin = rhs - lhs."""
    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool

    @classmethod
    def of(cls, name: str, lhs: float, rhs: float, slack: float = 0.0,
           strict: bool = False) -> InequalityCheck:
        """Checks lhs <= rhs + slack, or lhs < rhs + slack when ``strict``."""
        passed = lhs < rhs + slack if strict else lhs <= rhs + slack
        return cls(name, float(lhs), float(rhs), float(rhs - lhs), bool(passed))

    def to_dict(self) -> dict:
        """JSON-compatible layout."""
        return {
            "name": self.name, "lhs": self.lhs, "rhs": self.rhs,
            "margin": self.margin, "pass": self.passed,
        }


@dataclass
class VerificationReport:
    """Collection of checked inequalities."""
    title: str
    checks: List[InequalityCheck] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    refused: bool = False
    first_violation: Optional[dict] = None
    values: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """Whether the checks ran and all of them passed."""
        return not self.refused and all(check.passed for check in self.checks)

    def extend(self, other: VerificationReport):
        """Merges another report into this one."""
        self.checks.extend(other.checks)
        self.notes.extend(other.notes)
        self.refused = self.refused or other.refused
        self.first_violation = self.first_violation or other.first_violation
        self.values.update(other.values)

    def to_dict(self) -> dict:
        """JSON-compatible layout."""
        return {
            "title": self.title,
            "passed": self.passed,
            "refused": self.refused,
            "checks": [check.to_dict() for check in self.checks],
            "notes": list(self.notes),
            "first_violation": self.first_violation,
            "values": dict(self.values),
        }


def render_summary(report: VerificationReport) -> str:
    """Human-readable summary of a verification report."""
    template = Environment(loader=BaseLoader).from_string(VERIFICATION_SUMMARY_TEMPLATE)
    document = report.to_dict()
    return template.render(
        title=report.title, passed=report.passed,
        checks=document["checks"], notes=document["notes"]
    )


def _worst_sample_check(name: str, times, lhs, rhs, slack=0.0, strict=False):
    """Aggregates a per-sample inequality into its tightest sample."""
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    if lhs.size == 0:
        return None, None
    margins = rhs + slack - lhs
    worst = int(np.argmin(margins))
    check = InequalityCheck.of(f"{name} (tightest at t={times[worst]:.6g})",
                               lhs[worst], rhs[worst], slack, strict)
    violating = np.flatnonzero(margins <= 0 if strict else margins < 0)
    first = None
    if violating.size:
        index = int(violating[0])
        first = {"check": name, "t": float(times[index]),
                 "lhs": float(lhs[index]), "rhs": float(rhs[index])}
    return check, first


def _fit_window(times: np.ndarray, values: np.ndarray, floor: float) -> Optional[Tuple[float, float]]:
    """Drops the transient samples and stops at the first sample at or below the floor."""
    start = int(math.ceil(FIT_TRANSIENT_FRACTION * len(times)))
    below = np.flatnonzero(values[start:] <= floor)
    stop = start + int(below[0]) if below.size else len(times)
    if stop - start < FIT_MIN_SAMPLES:
        return None
    return float(times[start]), float(times[stop - 1])


def envelope_constants(
        constants: ConstantsReport, initial_difference: float, params: ModelParams
) -> Dict[int, float]:
    """c6*(s) = ||u0 - U||_2^(2/s) (c5* + (lambda/mu) e^gamma)^(1 - 2/s) per exponent s."""
    bound = constants.c5s + params.carrying_capacity * math.exp(params.gamma)
    return {
        s: initial_difference ** (2.0 / s) * bound ** (1.0 - 2.0 / s)
        for s in INTERPOLATION_EXPONENTS
    }


# pylint: disable=too-many-locals,too-many-statements
def check_convergence_theorem(
        trajectory: TrajectoryRecord, steady_pair: SteadyStatePair, params: ModelParams,
        constants: ConstantsReport, tol: float = CONVERGENCE_TOL
) -> VerificationReport:
    """
    Checks the exponential convergence of a trajectory to a steady state.

    Requires gamma < gamma*'; otherwise a refused report is returned, since
    the theory gives no guarantee there. The checks are:

    * ||u(t) - U||_2 <= e^(-mu F_e2* t) ||u0 - U||_2 (1 + tol) above the
      discretization floor;
    * the interpolation ||u~||_s <= ||u~||_2^(2/s) ||u~||_inf^(1 - 2/s) and the
      envelope ||u~(t)||_s <= e^(-(2/s) mu F_e2* t) c6*(s) for s in {2, 4, 32};
    * decay of ||v - V||_inf and of the second differences of v - V (both
      surrogates of the W^(2,s) norm) at a fitted rate >= mu F_e2*;
    * the fitted rate of ||u - U||_2 is >= mu F_e2* with r^2 >= 0.98;
    * the signal-difference energy inequality at every sample.

    The discretization floor of a series is max(h^2, dt) times the larger of
    its initial value and the size of the matching steady quantity.
    """
    report = VerificationReport(title="exponential convergence to the steady state")
    if params.gamma >= constants.gamma_star_prime:
        report.refused = True
        report.checks.append(InequalityCheck.of(
            "precondition gamma < gamma*'", params.gamma, constants.gamma_star_prime
        ))
        report.notes.append("gamma is not below gamma*'; the convergence theory gives no guarantee")
        return report
    if not trajectory.has_reference:
        raise PreconditionError("Trajectory was recorded without a steady reference.")

    grid = steady_pair.U.grid
    rate = params.mu * constants.F_e2_star_at_gamma
    times = trajectory.times
    level = max(grid.max_spacing ** 2, trajectory.dt)
    report.values.update({"target_rate": rate, "F_e2_star": constants.F_e2_star_at_gamma})

    def floor_of(series: np.ndarray, reference: float) -> float:
        return level * max(float(series[0]), reference)

    def add(check_and_first):
        check, first = check_and_first
        if check is not None:
            report.checks.append(check)
            if first is not None and report.first_violation is None:
                report.first_violation = first

    l2_diff = trajectory.column("l2_diff_u")
    initial = float(l2_diff[0])
    l2_floor = floor_of(l2_diff, lp_norm(steady_pair.U, 2))
    above = l2_diff > l2_floor
    envelope = np.exp(-rate * times) * initial * (1.0 + tol)
    add(_worst_sample_check("L2 decay envelope", times[above], l2_diff[above], envelope[above]))

    c6s = envelope_constants(constants, initial, params)
    constants.c6s = c6s
    linf_diff = np.asarray(trajectory.linf_diff_u)
    for exponent in INTERPOLATION_EXPONENTS:
        ls_diff = np.asarray(trajectory.ls_diff_u[exponent])
        interpolation = l2_diff ** (2.0 / exponent) * linf_diff ** (1.0 - 2.0 / exponent)
        add(_worst_sample_check(
            f"L^{exponent} interpolation", times, ls_diff, interpolation,
            slack=1e-12 * max(1.0, float(interpolation.max()))
        ))
        bound = np.exp(-(2.0 / exponent) * rate * times) * c6s[exponent] * (1.0 + tol)
        add(_worst_sample_check(
            f"L^{exponent} decay envelope", times[above], ls_diff[above], bound[above]
        ))

    d2_diff = trajectory.column("d2_diff_v")
    linf_diff_v = trajectory.column("linf_diff_v")
    fits = {
        "l2_diff_u": (l2_diff, l2_floor),
        "linf_diff_v": (linf_diff_v, floor_of(linf_diff_v, lp_norm(steady_pair.V, math.inf))),
        "d2_diff_v": (d2_diff, floor_of(d2_diff, second_difference_norm(steady_pair.V))),
    }
    for column, (series, floor) in fits.items():
        window = _fit_window(times, series, floor)
        if window is None:
            report.notes.append(
                f"{column}: fewer than {FIT_MIN_SAMPLES} samples above the floor "
                f"{floor:.3g}; decay-rate check skipped"
            )
            continue
        fit = fit_decay_rate(list(zip(times, series)), window)
        report.values[f"{column}_fit"] = {
            "rate": fit.rate, "r_squared": fit.r_squared, "window": list(window)
        }
        surrogate = "" if column == "l2_diff_u" else " (W^2,s surrogate)"
        report.checks.append(InequalityCheck.of(
            f"decay rate of {column}{surrogate} >= mu F_e2*", rate, fit.rate
        ))
        if column == "l2_diff_u":
            report.checks.append(InequalityCheck.of(
                "r^2 of the L2 decay fit >= 0.98", 0.98, fit.r_squared
            ))

    energy = np.asarray(trajectory.energy)
    add(_worst_sample_check(
        "signal-difference energy inequality", times, energy[:, 0], energy[:, 1],
        slack=1e-12
    ))

    logger.info(
        "Convergence check: %d check(s), passed=%s", len(report.checks), report.passed,
        extra={"category": "ANALYSIS", "event": "CONVERGENCE"}
    )
    return report


def check_steady_bounds(pair: SteadyStatePair, params: ModelParams,
                        slack: float = 1e-6) -> VerificationReport:
    """Bounds of a steady state: (lambda/mu) e^(V-gamma) <= U <= (lambda/mu) e^V, 0 < V < gamma."""
    report = VerificationReport(title="steady-state bounds")
    capacity, gamma = params.carrying_capacity, params.gamma
    u, v = pair.U.values, pair.V.values
    lower = capacity * np.exp(v - gamma)
    upper = capacity * np.exp(v)
    worst_lower = int(np.argmax(lower - u))
    worst_upper = int(np.argmax(u - upper))
    report.checks.extend([
        InequalityCheck.of("U >= (lambda/mu) e^(V - gamma)", lower[worst_lower], u[worst_lower],
                           slack),
        InequalityCheck.of("U <= (lambda/mu) e^V", u[worst_upper], upper[worst_upper], slack),
        InequalityCheck.of("V > 0", 0.0, float(v.min()), strict=True),
        InequalityCheck.of("V < gamma", float(v.max()), gamma, slack, strict=True),
    ])
    report.values["steady"] = pair.to_dict()
    return report


def check_trajectory_bounds(
        trajectory: TrajectoryRecord, params: ModelParams, constants: ConstantsReport
) -> VerificationReport:
    """
    Global bounds along a trajectory: positivity, 0 < v < gamma, the L1
    bound, the logistic sub-solution and the uniform bound sup ||u||_inf <= c5*.
    """
    report = VerificationReport(title="global bounds along the trajectory")
    times = trajectory.times

    def add(check_and_first):
        check, first = check_and_first
        if check is not None:
            report.checks.append(check)
            if first is not None and report.first_violation is None:
                report.first_violation = first

    min_u = trajectory.column("min_u")
    min_v, max_v = trajectory.column("min_v"), trajectory.column("max_v")
    zeros = np.zeros_like(times)
    add(_worst_sample_check("u > 0", times, zeros, min_u, strict=True))
    add(_worst_sample_check("v > 0", times, zeros, min_v, strict=True))
    add(_worst_sample_check("v < gamma", times, max_v, np.full_like(times, params.gamma),
                            strict=True))
    add(_worst_sample_check(
        "L1 bound", times, trajectory.column("l1_u"),
        np.full_like(times, trajectory.l1_bound * (1.0 + L1_RELATIVE_TOL))
    ))
    add(_worst_sample_check(
        "logistic sub-solution", times,
        trajectory.column("y_sub") - trajectory.sub_solution_tolerance, min_u
    ))
    sup_u = float(trajectory.column("linf_u").max())
    report.checks.append(InequalityCheck.of("sup_t ||u||_inf <= c5*", sup_u, constants.c5s))
    return report
