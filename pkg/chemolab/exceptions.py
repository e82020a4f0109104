"""
Exceptions raised by the chemotaxis laboratory.


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


class ChemolabError(Exception):
    """Base class for chemolab specific exceptions"""
    def __init__(self, message, additional_context=None):
        self.message = message
        self.additional_context = additional_context
        super().__init__(self.message)


class ConfigurationError(ChemolabError):
    """A grid, parameter set or configuration file is invalid.

    The message always names the offending field so that the user can fix
    the configuration without reading a traceback.
    """


class DomainError(ChemolabError):
    """An argument lies outside the mathematical domain of an operation,
    e.g. an L^p exponent below 1 or a nonpositive value in a decay fit."""


class AssemblyError(ChemolabError):
    """A discrete operator could not be assembled from the given coefficients."""


class PreconditionError(ChemolabError):
    """The inputs of an operation violate its documented preconditions."""


class NumericalError(ChemolabError):
    """A numerical procedure failed.

    The additional context carries the residual report of the failing
    procedure (residual history, last iterate, iteration counts).
    """


class DivergenceError(NumericalError):
    """Newton iteration diverged or ran out of iterations."""


class NonConvergenceError(NumericalError):
    """An iterative procedure (Krylov, eigen or fixed-point iteration) did not
    reach its tolerance within the configured number of iterations."""


class BranchError(NumericalError):
    """The density solver converged to the trivial branch W = 0.

    A restart from a strictly positive initial guess is required.
    """


class InvariantViolationError(ChemolabError):
    """A discrete invariant that the theory guarantees was violated.

    This usually flags a discretization that is too coarse for the
    requested parameters.
    """


class PositivityLossError(InvariantViolationError):
    """A time step produced a nonpositive density.

    Values are never clipped: a positivity loss always surfaces as this error.
    """


class StepRejectedError(ChemolabError):
    """The requested time step exceeds the stability bound of the scheme."""
    def __init__(self, message, dt_max, additional_context=None):
        self.dt_max = dt_max
        super().__init__(message, additional_context)


class VerificationFailure(ChemolabError):
    """A runtime monitor or a theorem check failed.

    ``kind`` is ``"scheme"`` when the numerical scheme itself broke down and
    ``"theorem"`` when a bound was violated beyond the discretization tolerance.
    The additional context carries the full trajectory or report.
    """
    def __init__(self, message, kind="theorem", additional_context=None):
        self.kind = kind
        super().__init__(message, additional_context)


class OracleError(ChemolabError):
    """A reference shooting solver could not bracket or resolve its root."""
