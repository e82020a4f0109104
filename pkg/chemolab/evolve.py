"""
Time integration of the parabolic-elliptic system

    u_t = div(grad u - u grad v) + lambda u - mu u^2,   d_nu u - u d_nu v = 0,
    0 = div(grad v) - u v,                               d_nu v = (gamma - v) g,

together with the logistic sub-solution, runtime monitors of the a priori
bounds and the constant chain of the uniform L^inf bound.

One step is semi-implicit: diffusion implicit, the upwinded chemotactic flux
explicit with v solved from the current u, growth explicit and crowding
linearized as mu u_old u_new. The step keeps u positive without clipping
whenever dt is below the upwind bound of :meth:`FluxOperator.max_stable_dt`.


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
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from chemolab.analysis import ConstantsReport, compute_F_e2_star
from chemolab.constants import (
    DEFAULT_MONITOR_ALPHA, DT_GROWTH_AFTER, DT_MIN, EVOLUTION_BOUND_SLACK,
    INTERPOLATION_EXPONENTS, L1_RELATIVE_TOL, MONITOR_CALIBRATION_GAMMA,
    MONITOR_CALIBRATION_PAIRS, TRAJECTORY_COLUMNS
)
from chemolab.enum import BoundaryCondition
from chemolab.exceptions import (
    ConfigurationError, DomainError, InvariantViolationError, PositivityLossError,
    PreconditionError, StepRejectedError, VerificationFailure
)
from chemolab.linops import (
    SparseOperator, assemble_flux_operator, assemble_robin_elliptic, load_vector, solve_linear
)
from chemolab.mesh import (
    DomainSpec, Grid, ScalarField, build_grid, estimate_gn_constant, estimate_trace_constant,
    gn_epsilon_constant, gn_prefactor, lp_norm, second_difference_norm, trace_epsilon_constant
)
from chemolab.params import BoundaryProfile, ModelParams
from chemolab.publisher import Publisher
from chemolab.steady import SteadyStatePair, compute_gamma_star, difference_energy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionState:
    """Density and signal at time t after ``step_index`` accepted steps."""
    t: float
    u: ScalarField
    v: ScalarField
    step_index: int = 0


@dataclass(frozen=True)
class StepControl:
    """
    Time-step control.

    Attributes:
        limit_diffusion: also bound dt by the explicit diffusion limit h^2 / (2 n).
        growth_after: accepted steps after which a reduced dt is doubled again.
        dt_min: smallest step before the run is declared broken.
    """
    limit_diffusion: bool = False
    growth_after: int = DT_GROWTH_AFTER
    dt_min: float = DT_MIN


@dataclass(frozen=True)
class TrajectorySample:
    """One row of a trajectory; differences are NaN when no steady reference is given."""
    t: float
    l1_u: float
    l2_u: float
    linf_u: float
    min_u: float
    min_v: float
    max_v: float
    y_sub: float
    l2_diff_u: float = math.nan
    linf_diff_v: float = math.nan
    d2_diff_v: float = math.nan

    def as_row(self) -> Tuple[float, ...]:
        """Values in trajectory column order."""
        return tuple(getattr(self, column) for column in TRAJECTORY_COLUMNS)


# pylint: disable=too-many-instance-attributes
@dataclass
class TrajectoryRecord:
    """
    Sampled monitors of a simulation.

    Attributes:
        samples: recorded samples, strictly increasing in time.
        snapshots: (u, v) at the requested snapshot times.
        energy: (lhs, rhs) of the signal-difference energy inequality per
            sample, when a steady reference was given.
        linf_diff_u: ||u - U||_inf per sample, when a steady reference was given.
        ls_diff_u: ||u - U||_s per sample for the interpolation exponents s.
        l1_bound: max{||u0||_1, |Omega| lambda/mu}.
        sub_solution_tolerance: slack alpha (h^2 + dt) of the sub-solution monitor.
        dt: requested time step.
        accepted_steps, rejected_steps: step counters.
    """
    samples: List[TrajectorySample] = field(default_factory=list)
    snapshots: Dict[float, Tuple[ScalarField, ScalarField]] = field(default_factory=dict)
    energy: List[Tuple[float, float]] = field(default_factory=list)
    linf_diff_u: List[float] = field(default_factory=list)
    ls_diff_u: Dict[int, List[float]] = field(default_factory=dict)
    l1_bound: float = math.nan
    sub_solution_tolerance: float = 0.0
    dt: float = math.nan
    accepted_steps: int = 0
    rejected_steps: int = 0

    @property
    def has_reference(self) -> bool:
        """Whether differences to a steady state were recorded."""
        return bool(self.energy)

    def column(self, name: str) -> np.ndarray:
        """One trajectory column as an array."""
        if name not in TRAJECTORY_COLUMNS:
            raise KeyError(name)
        return np.array([getattr(sample, name) for sample in self.samples])

    @property
    def times(self) -> np.ndarray:
        """Sample times."""
        return self.column("t")

    def rows(self) -> List[Tuple[float, ...]]:
        """All samples in column order."""
        return [sample.as_row() for sample in self.samples]


def sub_solution(t, y0: float, lambda_: float, mu: float, gamma: float):
    """
    Logistic lower barrier y' = lambda y - (mu + gamma) y^2, y(0) = y0:
    y(t) = lambda y0 / ((mu + gamma) y0 + (lambda - (mu + gamma) y0) e^(-lambda t)).

    Accepts scalar or array times.
    """
    if not y0 > 0:
        raise DomainError(f"sub-solution needs y0 > 0, got {y0}")
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("sub-solution is defined for t >= 0 only")
    decay = mu + gamma
    value = lambda_ * y0 / (decay * y0 + (lambda_ - decay * y0) * np.exp(-lambda_ * times))
    return float(value) if value.ndim == 0 else value


def solve_signal_linear(u: ScalarField, params: ModelParams, grid: Grid) -> ScalarField:
    """
    Signal for a given density: one linear Robin solve of
    -div(grad v) + u v = 0, d_nu v + g v = gamma g.

    :raises PreconditionError: if u has negative values.
    :raises InvariantViolationError: if v leaves [0, gamma].
    """
    if np.any(u.values < 0):
        raise PreconditionError(
            "Signal solve needs a nonnegative density.", additional_context={"min_u": u.min()}
        )
    g = params.g_spec.nodal_values(grid)
    operator = assemble_robin_elliptic(grid, 1.0, u, g)
    v = solve_linear(operator, load_vector(grid, 0.0, params.gamma * g))
    if v.min() < -EVOLUTION_BOUND_SLACK or v.max() > params.gamma + EVOLUTION_BOUND_SLACK:
        raise InvariantViolationError(
            "Signal left the interval [0, gamma].",
            additional_context={"min_v": v.min(), "max_v": v.max(), "gamma": params.gamma}
        )
    return v


class Integrator:
    """Advances the system for one parameter set on one grid."""

    def __init__(self, params: ModelParams, grid: Grid, control: Optional[StepControl] = None):
        self.params = params
        self.grid = grid
        self.control = control or StepControl()
        self.flux = assemble_flux_operator(grid)

    def initial_state(self, u0: ScalarField) -> EvolutionState:
        """State at t = 0 with the signal solved from u0."""
        return EvolutionState(0.0, u0, solve_signal_linear(u0, self.params, self.grid), 0)

    def max_stable_dt(self, state: EvolutionState) -> float:
        """Largest admissible step from the given state."""
        return self.flux.max_stable_dt(state.v, self.control.limit_diffusion)

    def step(self, state: EvolutionState, dt: float, reaction: bool = True,
             t_next: Optional[float] = None) -> EvolutionState:
        """
        One semi-implicit step.

        :param reaction: whether to apply growth and crowding; without them
            the step conserves the integral of u.
        :param t_next: time to stamp on the new state; ``state.t + dt`` by default.
        :raises StepRejectedError: if dt exceeds the positivity bound.
        :raises PositivityLossError: if the new density is not positive.
        """
        if not dt > 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        dt_max = self.max_stable_dt(state)
        if dt > dt_max:
            raise StepRejectedError(
                f"Step {dt:.3e} exceeds the stability bound {dt_max:.3e}.", dt_max=dt_max
            )

        weights = self.grid.volume_weights
        growth, crowding = (self.params.lambda_, self.params.mu) if reaction else (0.0, 0.0)
        u = state.u.values
        rhs = weights * u * (1.0 + dt * growth) - dt * self.flux.divergence(u, state.v)
        lhs = sparse.diags(weights * (1.0 + dt * crowding * u)) + dt * self.flux.diffusion.matrix
        operator = SparseOperator(self.grid, lhs.tocsr(), BoundaryCondition.FLUX)
        u_new = solve_linear(operator, rhs)

        if u_new.min() <= 0:
            raise PositivityLossError(
                f"Density lost positivity at t = {state.t + dt:.6g}.",
                additional_context={"min_u": u_new.min(), "dt": dt, "dt_max": dt_max}
            )
        v_new = solve_signal_linear(u_new, self.params, self.grid)
        return EvolutionState(
            state.t + dt if t_next is None else t_next, u_new, v_new, state.step_index + 1
        )


def step(state: EvolutionState, dt: float, params: ModelParams,
         control: Optional[StepControl] = None, reaction: bool = True) -> EvolutionState:
    """Advances ``state`` by one step of size dt, see :meth:`Integrator.step`."""
    return Integrator(params, state.u.grid, control).step(state, dt, reaction=reaction)


def _sample_targets(t_end: float, sample_every: float, snapshot_times: Sequence[float]):
    count = int(math.floor(t_end / sample_every + 1e-9))
    samples = {round(k * sample_every, 12) for k in range(1, count + 1)} | {t_end}
    samples = {t for t in samples if 0 < t <= t_end}
    snapshots = {float(t) for t in snapshot_times if 0 < t <= t_end}
    return sorted(samples | snapshots), samples, snapshots


class _Monitor:
    """Records samples and checks the runtime bounds."""

    # pylint: disable=too-many-arguments
    def __init__(self, params, grid, u0, dt, monitor_alpha, steady_ref, enforce):
        self.params = params
        self.grid = grid
        self.steady_ref = steady_ref
        self.enforce = enforce
        self.y0 = u0.min()
        self.tolerance = monitor_alpha * (grid.max_spacing ** 2 + dt)
        self.record = TrajectoryRecord(dt=dt, sub_solution_tolerance=self.tolerance)
        self.record.l1_bound = max(
            lp_norm(u0, 1), grid.domain.measure * params.carrying_capacity
        )

    def sample(self, state: EvolutionState) -> TrajectorySample:
        """Records and checks one sample."""
        params, u, v = self.params, state.u, state.v
        values = dict(
            t=state.t, l1_u=lp_norm(u, 1), l2_u=lp_norm(u, 2), linf_u=lp_norm(u, math.inf),
            min_u=u.min(), min_v=v.min(), max_v=v.max(),
            y_sub=sub_solution(state.t, self.y0, params.lambda_, params.mu, params.gamma),
        )
        if self.steady_ref is not None:
            u_diff = u - self.steady_ref.U
            v_diff = v - self.steady_ref.V
            values.update(
                l2_diff_u=lp_norm(u_diff, 2), linf_diff_v=lp_norm(v_diff, math.inf),
                d2_diff_v=second_difference_norm(v_diff),
            )
            self.record.linf_diff_u.append(lp_norm(u_diff, math.inf))
            for exponent in INTERPOLATION_EXPONENTS:
                self.record.ls_diff_u.setdefault(exponent, []).append(lp_norm(u_diff, exponent))
            self.record.energy.append(
                difference_energy(v_diff.values, u_diff.values, params, self.grid)
            )
        sample = TrajectorySample(**values)
        self.record.samples.append(sample)
        if self.enforce:
            self._check(sample)
        return sample

    def _check(self, sample: TrajectorySample):
        violations = []
        if sample.l1_u > self.record.l1_bound * (1.0 + L1_RELATIVE_TOL):
            violations.append(
                f"L1 bound: ||u||_1 = {sample.l1_u:.9g} > {self.record.l1_bound:.9g}"
            )
        if sample.min_u < sample.y_sub - self.tolerance:
            violations.append(
                f"sub-solution: min u = {sample.min_u:.9g} < y(t) - tol = "
                f"{sample.y_sub - self.tolerance:.9g}"
            )
        if sample.min_v <= 0 or sample.max_v >= self.params.gamma:
            violations.append(
                f"signal bounds: v in [{sample.min_v:.9g}, {sample.max_v:.9g}] "
                f"not inside (0, {self.params.gamma})"
            )
        if violations:
            raise VerificationFailure(
                f"Bound violated beyond the discretization tolerance at t = {sample.t:.6g} "
                f"(theorem-level violation): " + "; ".join(violations),
                kind="theorem",
                additional_context={"trajectory": self.record, "violations": violations}
            )


def _max_manufactured_error(integrator: Integrator, u0: ScalarField, reaction: bool, dt: float,
                            exact) -> float:
    state = integrator.initial_state(u0)
    worst = 0.0
    for _ in range(int(round(1.0 / dt))):
        state = integrator.step(state, dt, reaction=reaction)
        worst = max(worst, float(np.max(np.abs(state.u.values - exact(state.t)))))
    return worst


def calibrate_monitor_alpha(
        pairs: Sequence[Tuple[int, float]] = MONITOR_CALIBRATION_PAIRS
) -> float:
    """
    Calibrates alpha of the monitor tolerance alpha (h^2 + dt) on two
    manufactured problems with closed-form solutions, integrated up to t = 1
    on the unit interval with lambda = mu = 1 and a signal level small enough
    for the chemotactic flux to vanish:

    * u0 = 1/2 with growth and crowding stays uniform on the logistic curve
      1 / (1 + e^-t);
    * u0 = 1 + cos(pi x) / 2 without reaction is the heat mode
      1 + e^(-pi^2 t) cos(pi x) / 2.

    :param pairs: (resolution, dt) pairs to run.
    :return: the largest max-norm error divided by h^2 + dt, over every
        step of both problems and every pair.
    """
    params = ModelParams(
        lambda_=1.0, mu=1.0, gamma=MONITOR_CALIBRATION_GAMMA,
        g_spec=BoundaryProfile.constant(1.0), domain_spec=DomainSpec.interval()
    )
    alpha = 0.0
    for resolution, dt in pairs:
        grid = build_grid(params.domain_spec, resolution)
        integrator = Integrator(params, grid)
        mode = np.cos(np.pi * grid.axes[0])
        logistic = _max_manufactured_error(
            integrator, ScalarField.constant(grid, 0.5), True, dt,
            lambda t: sub_solution(t, 0.5, 1.0, 1.0, 0.0)
        )
        heat = _max_manufactured_error(
            integrator, ScalarField(grid, 1.0 + 0.5 * mode), False, dt,
            lambda t: 1.0 + 0.5 * math.exp(-math.pi ** 2 * t) * mode
        )
        scale = grid.max_spacing ** 2 + dt
        logger.debug(
            "Calibration at resolution %d, dt %.3g: logistic error %.3e, heat error %.3e",
            resolution, dt, logistic, heat, extra={"category": "EVOLVE", "event": "CALIBRATION"}
        )
        alpha = max(alpha, logistic / scale, heat / scale)
    logger.info(
        "Calibrated monitor alpha = %.6g", alpha,
        extra={"category": "EVOLVE", "event": "CALIBRATION"}
    )
    return alpha


# pylint: disable=too-many-arguments,too-many-locals
def simulate(
        u0: ScalarField, params: ModelParams, t_end: float, dt: float, grid: Grid,
        sample_every: Optional[float] = None,
        steady_ref: Optional[SteadyStatePair] = None,
        snapshot_times: Sequence[float] = (),
        control: Optional[StepControl] = None,
        publisher: Optional[Publisher] = None,
        monitor_alpha: float = DEFAULT_MONITOR_ALPHA,
        enforce_monitors: bool = True,
) -> TrajectoryRecord:
    """
    Integrates from u0 up to t_end.

    Steps land exactly on every sample time (multiples of ``sample_every``,
    plus t_end) and snapshot time. A rejected step is retried with dt halved
    until it is admissible; after ``control.growth_after`` accepted steps a
    reduced dt is doubled again, never beyond the requested dt.

    At every sample the L1 bound max{||u0||_1, |Omega| lambda/mu}, the
    logistic sub-solution up to monitor_alpha (h^2 + dt) and the signal
    bounds 0 < v < gamma are checked, and the sample is published.

    :raises VerificationFailure: ``kind="theorem"`` when a monitor fails,
        ``kind="scheme"`` when the scheme breaks down (positivity loss, step
        size collapse). The additional context carries the trajectory so far.
    """
    if u0.grid is not grid and u0.grid.key != grid.key:
        raise ConfigurationError("u0 lives on another grid")
    if not u0.min() > 0:
        raise PreconditionError(
            "Initial density must be positive.", additional_context={"min_u0": u0.min()}
        )
    for name, value in (("t_end", t_end), ("dt", dt)):
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value!r}")
    sample_every = sample_every or dt
    if not sample_every > 0:
        raise ConfigurationError(f"sample_every must be positive, got {sample_every!r}")

    integrator = Integrator(params, grid, control)
    monitor = _Monitor(params, grid, u0, dt, monitor_alpha, steady_ref, enforce_monitors)
    record = monitor.record
    targets, sample_times, snapshot_set = _sample_targets(t_end, sample_every, snapshot_times)

    def scheme_failure(message, error):
        return VerificationFailure(
            f"Numerical scheme failure (not a theorem violation): {message}", kind="scheme",
            additional_context={"trajectory": record, "cause": repr(error)}
        )

    try:
        state = integrator.initial_state(u0)
    except InvariantViolationError as error:
        raise scheme_failure(error.message, error) from error
    publisher = publisher or Publisher()
    publisher.notify(monitor.sample(state))
    if 0.0 in {float(t) for t in snapshot_times}:
        record.snapshots[0.0] = (state.u, state.v)

    current_dt, accepted_since_change = dt, 0
    time_eps = 1e-12 * max(1.0, t_end)
    for target in targets:
        while state.t < target - time_eps:
            remaining = target - state.t
            last = current_dt >= remaining - time_eps
            trial_dt = remaining if last else current_dt
            try:
                state = integrator.step(state, trial_dt, t_next=target if last else None)
            except StepRejectedError as rejection:
                while current_dt > rejection.dt_max:
                    current_dt *= 0.5
                accepted_since_change = 0
                record.rejected_steps += 1
                logger.warning(
                    "Step %.3e rejected at t=%.6g, retrying with %.3e",
                    trial_dt, state.t, current_dt,
                    extra={"category": "EVOLVE", "event": "STEP_REJECTED"}
                )
                if current_dt < integrator.control.dt_min:
                    raise scheme_failure("time step collapsed", rejection) from rejection
                continue
            except InvariantViolationError as error:
                raise scheme_failure(error.message, error) from error

            record.accepted_steps += 1
            accepted_since_change += 1
            if current_dt < dt and accepted_since_change >= integrator.control.growth_after:
                current_dt = min(2.0 * current_dt, dt)
                accepted_since_change = 0

        if target in sample_times:
            publisher.notify(monitor.sample(state))
        if target in snapshot_set:
            record.snapshots[target] = (state.u, state.v)

    logger.info(
        "Simulated up to t=%.6g: %d accepted and %d rejected step(s), %d sample(s)",
        state.t, record.accepted_steps, record.rejected_steps, len(record.samples),
        extra={"category": "EVOLVE", "event": "DONE"}
    )
    return record


def uniform_bound_constants(
        params: ModelParams, grid: Grid, u0: ScalarField,
        trace_constant: Optional[float] = None, gn_constant: Optional[float] = None,
        eps: float = 0.5
) -> ConstantsReport:
    """
    Every explicit constant of the a priori theory for this run:

    * c1* = C_T^4 (gamma ||g||)^2 / 8 + lambda + 2,
    * c2* = C4 max{1, (c1* / 2)^(n/2)} c1* with C4 = C_GN max{1, C_GN^(n/2)},
    * c3* = |Omega| + c2*, c4* = 2^(4n) c3*,
    * c5* = c4* max{||u0||_inf, ||u0||_1, lambda |Omega| / mu}, the uniform
      bound on ||u(t)||_inf,

    together with c1(eps), c1'(eps), the thresholds gamma* and gamma*' and the
    values of F1, F2 and F_e2* at gamma. C_T and C_GN are estimated on the
    grid unless given.
    """
    trace_constant = trace_constant or estimate_trace_constant(grid)
    gn_constant = gn_constant or estimate_gn_constant(grid)
    n = grid.dimension
    measure = grid.domain.measure
    gamma, growth, crowding, g_sup = params.gamma, params.lambda_, params.mu, params.g_sup

    c1s = trace_constant ** 4 * (gamma * g_sup) ** 2 / 8.0 + growth + 2.0
    c2s = gn_prefactor(gn_constant, n) * max(1.0, (c1s / 2.0) ** (n / 2.0)) * c1s
    c3s = measure + c2s
    c4s = c3s * 2.0 ** (4 * n)
    c5s = c4s * max(lp_norm(u0, math.inf), lp_norm(u0, 1), growth * measure / crowding)

    threshold = compute_gamma_star(growth, crowding, g_sup, trace_constant)
    decay = compute_F_e2_star(params, u0.min(), trace_constant)

    report = ConstantsReport(
        trace_constant=trace_constant,
        gn_constant=gn_constant,
        eps=eps,
        c1_eps=trace_epsilon_constant(eps, trace_constant),
        c1_prime_eps=gn_epsilon_constant(eps, gn_constant, n),
        gamma=gamma,
        gamma_star=threshold.gamma_star,
        F1_at_gamma=float(threshold.F1(gamma)),
        F2_at_gamma=float(threshold.F2(gamma)),
        F_e2_star_at_gamma=decay.value,
        gamma_star_prime=decay.gamma_star_prime,
        c1s=c1s, c2s=c2s, c3s=c3s, c4s=c4s, c5s=c5s,
        inputs={
            "lambda": growth, "mu": crowding, "gamma": gamma, "g_sup": g_sup,
            "measure": measure, "dimension": n, "inf_u0": u0.min(),
            "linf_u0": lp_norm(u0, math.inf), "l1_u0": lp_norm(u0, 1),
        },
        provenance={
            "domain": grid.kind.value,
            "lower": list(grid.domain.lower),
            "upper": list(grid.domain.upper),
            "resolution": list(grid.resolution),
            "trace_constant": "discrete boundary eigenproblem maximised over the "
                              "AM-GM splitting parameter",
            "gn_constant": "maximum Gagliardo-Nirenberg ratio over spikes, "
                           "exponentials, Gaussians and seeded random fields",
        },
    )
    logger.info(
        "Constants: C_T=%.6g C_GN=%.6g gamma*=%.6g gamma*'=%.6g c5*=%.6g",
        trace_constant, gn_constant, report.gamma_star, report.gamma_star_prime, c5s,
        extra={"category": "ANALYSIS", "event": "CONSTANTS"}
    )
    return report

