"""
Model and solver parameters.


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

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from chemolab.constants import (
    FP_MAX_ITER, FP_TOL, NEWTON_DAMPING_MIN, NEWTON_MAX_ITER,
    NEWTON_TOL_RESIDUAL, NEWTON_TOL_STEP
)
from chemolab.enum import BoundaryProfileKind
from chemolab.exceptions import ConfigurationError
from chemolab.mesh import DomainSpec, Grid


def _require_positive(name: str, value: float):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigurationError(f"{name} must be a positive number, got {value!r}")


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping and damping controls of the damped Newton iteration."""
    tol_residual: float = NEWTON_TOL_RESIDUAL
    tol_step: float = NEWTON_TOL_STEP
    max_iter: int = NEWTON_MAX_ITER
    damping_min: float = NEWTON_DAMPING_MIN

    def __post_init__(self):
        _require_positive("newton_tol_residual", self.tol_residual)
        _require_positive("newton_tol_step", self.tol_step)
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigurationError(
                f"newton_max_iter must be a positive integer, got {self.max_iter!r}"
            )
        if not 0 < self.damping_min <= 1:
            raise ConfigurationError(
                f"newton_damping_min must lie in (0, 1], got {self.damping_min!r}"
            )


@dataclass(frozen=True)
class BoundaryProfile:
    """
    Positive boundary coefficient g as a function of the normalized boundary
    arclength s in [0, 1].

    Families:
        constant: g = value.
        affine: g = value + slope * s.
        cosine-bump: g = value + amplitude * (1 + cos(2 pi (s - center) / width)) / 2
            for |s - center| <= width / 2, and g = value elsewhere.
    """
    kind: BoundaryProfileKind = BoundaryProfileKind.CONSTANT
    value: float = 1.0
    slope: float = 0.0
    amplitude: float = 0.0
    center: float = 0.5
    width: float = 0.25

    def __post_init__(self):
        if self.kind is BoundaryProfileKind.COSINE_BUMP:
            _require_positive("g_width", self.width)
        if not self.inf() > 0:
            raise ConfigurationError(
                f"g must be positive on the boundary, but its infimum is {self.inf()}"
            )

    @classmethod
    def constant(cls, value: float) -> BoundaryProfile:
        """Returns g = value."""
        return cls(BoundaryProfileKind.CONSTANT, value=value)

    def evaluate(self, arclength: np.ndarray) -> np.ndarray:
        """Values of g at the given arclength parameters."""
        s = np.asarray(arclength, dtype=float)
        if self.kind is BoundaryProfileKind.CONSTANT:
            return np.full_like(s, self.value)
        if self.kind is BoundaryProfileKind.AFFINE:
            return self.value + self.slope * s
        offset = s - self.center
        bump = 0.5 * (1.0 + np.cos(2.0 * np.pi * offset / self.width))
        return self.value + self.amplitude * np.where(np.abs(offset) <= 0.5 * self.width, bump, 0.0)

    def sup(self) -> float:
        """||g||_inf over the boundary."""
        if self.kind is BoundaryProfileKind.CONSTANT:
            return self.value
        if self.kind is BoundaryProfileKind.AFFINE:
            return max(self.value, self.value + self.slope)
        return self.value + max(self.amplitude, 0.0)

    def inf(self) -> float:
        """Infimum of g over the boundary."""
        if self.kind is BoundaryProfileKind.CONSTANT:
            return self.value
        if self.kind is BoundaryProfileKind.AFFINE:
            return min(self.value, self.value + self.slope)
        return self.value + min(self.amplitude, 0.0)

    def nodal_values(self, grid: Grid) -> np.ndarray:
        """Full-length nodal array holding g on boundary nodes and zero inside."""
        values = np.zeros(grid.node_count)
        values[grid.boundary_index] = self.evaluate(grid.boundary_arclength())
        return values


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the chemotaxis-consumption-growth model and of its
    steady-state solvers.

    Attributes:
        lambda_: growth rate.
        mu: crowding coefficient.
        gamma: ambient signal level at the boundary.
        g_spec: boundary coefficient g.
        domain_spec: the domain Omega.
        newton_cfg: Newton controls of the subproblem solvers.
        fp_tol: relative L^inf tolerance of the fixed-point iteration.
        fp_max_iter: iteration budget of the fixed-point iteration.
        relaxation: fixed-point relaxation factor in (0, 1]; 1 is plain Picard.
    """
    lambda_: float
    mu: float
    gamma: float
    g_spec: BoundaryProfile = field(default_factory=BoundaryProfile)
    domain_spec: DomainSpec = field(default_factory=DomainSpec.interval)
    newton_cfg: NewtonConfig = field(default_factory=NewtonConfig)
    fp_tol: float = FP_TOL
    fp_max_iter: int = FP_MAX_ITER
    relaxation: float = 1.0

    def __post_init__(self):
        _require_positive("lambda", self.lambda_)
        _require_positive("mu", self.mu)
        _require_positive("gamma", self.gamma)
        _require_positive("fp_tol", self.fp_tol)
        if int(self.fp_max_iter) != self.fp_max_iter or self.fp_max_iter < 1:
            raise ConfigurationError(
                f"fp_max_iter must be a positive integer, got {self.fp_max_iter!r}"
            )
        if not 0 < self.relaxation <= 1:
            raise ConfigurationError(
                f"relaxation must lie in (0, 1], got {self.relaxation!r}"
            )

    @property
    def carrying_capacity(self) -> float:
        """lambda / mu."""
        return self.lambda_ / self.mu

    @property
    def g_sup(self) -> float:
        """||g||_inf."""
        return self.g_spec.sup()

    def with_gamma(self, gamma: float) -> ModelParams:
        """Returns a copy with another ambient level."""
        return dataclasses.replace(self, gamma=gamma)
