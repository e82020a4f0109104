"""Chemotaxis laboratory enums.


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

from enum import Enum, IntEnum


class DomainKind(Enum):
    """Supported computational domains."""
    INTERVAL = "interval"
    RECTANGLE = "rectangle"


class BoundaryCondition(Enum):
    """Boundary closure of an assembled operator."""
    ROBIN = "robin"
    NEUMANN = "neumann"
    FLUX = "flux"


class BoundaryProfileKind(Enum):
    """Families of positive boundary coefficients g."""
    CONSTANT = "constant"
    AFFINE = "affine"
    COSINE_BUMP = "cosine-bump"


class InitialProfileKind(Enum):
    """Families of initial densities u0."""
    CONSTANT = "constant"
    COSINE = "cosine"
    GAUSSIAN_BUMP = "gaussian-bump"
    PERTURBED_CONSTANT = "perturbed-constant"


class Subcommand(Enum):
    """Command line subcommands."""
    STEADY = "steady"
    EVOLVE = "evolve"
    VERIFY = "verify"
    CONSTANTS = "constants"
    SWEEP_GAMMA = "sweep-gamma"
    ORACLE = "oracle"


class ExitCode(IntEnum):
    """Process exit codes of the command line interface."""
    SUCCESS = 0
    VERIFICATION_FAILED = 1
    USAGE_ERROR = 2
    NUMERICAL_FAILURE = 3
