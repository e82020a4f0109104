"""
Sparse discrete elliptic operators with Robin or no-flux closures, the
upwind chemotactic flux, and the linear solvers used by the nonlinear ones.

Operators are assembled in integrated (finite-volume) form: every row is the
pointwise finite-difference row multiplied by the node's quadrature weight.
For the Robin closure this is exactly the ghost-node elimination of the
boundary condition, and it keeps the operators symmetric.


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
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, bicgstab, cg, spilu

from chemolab.constants import DEFAULT_LINEAR_TOL, DT_SAFETY, KRYLOV_MAX_ITER
from chemolab.enum import BoundaryCondition
from chemolab.exceptions import AssemblyError, NonConvergenceError
from chemolab.mesh import Grid, ScalarField, stiffness_form

logger = logging.getLogger(__name__)

NodalData = Union[ScalarField, np.ndarray, float]


def as_nodal(grid: Grid, data: NodalData) -> np.ndarray:
    """Full-length nodal array from a field, an array or a scalar."""
    if isinstance(data, ScalarField):
        return data.values
    return np.broadcast_to(np.asarray(data, dtype=float), (grid.node_count,))


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """
    Square sparse operator on the nodes of a grid.

    Attributes:
        grid: grid whose nodes index rows and columns.
        matrix: CSR matrix of the operator.
        boundary_condition: closure the operator was assembled with.
    """
    grid: Grid
    matrix: sparse.csr_matrix
    boundary_condition: BoundaryCondition

    def __post_init__(self):
        rows, cols = self.matrix.shape
        if rows != cols or rows != self.grid.node_count:
            raise AssemblyError(
                f"Operator shape {self.matrix.shape} does not match "
                f"{self.grid.node_count} grid nodes."
            )

    @classmethod
    def identity(cls, grid: Grid) -> SparseOperator:
        """Identity operator on the grid."""
        return cls(grid, sparse.identity(grid.node_count, format="csr"), BoundaryCondition.NEUMANN)

    @property
    def dimension(self) -> int:
        """Number of rows (and columns)."""
        return self.matrix.shape[0]

    @property
    def entries(self):
        """(row, column, coefficient) triplets of the stored entries."""
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def apply(self, field: NodalData) -> np.ndarray:
        """Matrix-vector product."""
        return self.matrix @ as_nodal(self.grid, field)

    def is_singular_neumann(self) -> bool:
        """Whether constants lie in the kernel (pure-Neumann diffusion)."""
        row_sums = np.abs(self.matrix @ np.ones(self.dimension))
        scale = max(np.abs(self.matrix.diagonal()).max(), 1.0)
        return bool(row_sums.max() <= 1e-13 * scale)


def stiffness_matrix(grid: Grid, face_diffusivity: np.ndarray = None) -> SparseOperator:
    """Pure-Neumann diffusion operator -div(a grad .) with the given edge diffusivities."""
    return SparseOperator(grid, stiffness_form(grid, face_diffusivity), BoundaryCondition.NEUMANN)


def face_average(grid: Grid, nodal: np.ndarray) -> np.ndarray:
    """Arithmetic mean of a nodal quantity over the two ends of every edge."""
    return 0.5 * (nodal[grid.edge_tail] + nodal[grid.edge_head])


def assemble_robin_elliptic(
        grid: Grid, diffusivity: NodalData, reaction: NodalData, boundary_coefficient: NodalData
) -> SparseOperator:
    """
    Assembles -div(a grad V) + c V with the closure a d_nu V + g V = r.

    The boundary data r enters the right-hand side only, see :func:`load_vector`.

    :param diffusivity: a, positive at every node.
    :param reaction: c, nonnegative at every node.
    :param boundary_coefficient: g, positive at boundary nodes; interior
        values are ignored.
    :raises AssemblyError: on nonpositive diffusivity or boundary coefficient,
        or negative reaction.
    """
    a = as_nodal(grid, diffusivity)
    c = as_nodal(grid, reaction)
    g = as_nodal(grid, boundary_coefficient)
    if not np.all(a > 0):
        raise AssemblyError(
            "Diffusivity must be positive.",
            additional_context={"min_diffusivity": float(a.min())}
        )
    if not np.all(g[grid.boundary_index] > 0):
        raise AssemblyError(
            "Boundary coefficient must be positive on the boundary.",
            additional_context={"min_boundary_coefficient": float(g[grid.boundary_index].min())}
        )
    if not np.all(c >= 0):
        raise AssemblyError(
            "Reaction coefficient must be nonnegative.",
            additional_context={"min_reaction": float(c.min())}
        )

    matrix = stiffness_form(grid, face_average(grid, a)) \
        + sparse.diags(grid.boundary_weights * g + grid.volume_weights * c)
    return SparseOperator(grid, matrix.tocsr(), BoundaryCondition.ROBIN)


def load_vector(grid: Grid, source: NodalData, boundary_data: NodalData = 0.0) -> np.ndarray:
    """Right-hand side of an integrated operator: volume source plus boundary data."""
    return grid.volume_weights * as_nodal(grid, source) \
        + grid.boundary_weights * as_nodal(grid, boundary_data)


def solve_linear(
        operator: SparseOperator, rhs: NodalData, tol: float = DEFAULT_LINEAR_TOL
) -> ScalarField:
    """
    Solves ``operator x = rhs``.

    1D operators are tridiagonal and solved by a banded direct factorization;
    2D operators by BiCGSTAB with an incomplete-LU preconditioner. Singular
    pure-Neumann systems are solved by conjugate gradients, returning the
    zero-mean solution.

    :raises NonConvergenceError: if the residual ||A x - b|| exceeds
        ``tol * max(1, ||b||)``, in particular for incompatible singular systems.
    """
    grid = operator.grid
    b = np.array(as_nodal(grid, rhs), dtype=float)
    matrix = operator.matrix

    if operator.is_singular_neumann():
        solution = _solve_singular(matrix, b, tol)
    elif grid.dimension == 1:
        solution = _solve_tridiagonal(matrix, b)
    else:
        solution = _solve_krylov(matrix, b, tol)

    scale = max(1.0, float(np.linalg.norm(b)))
    residual = float(np.linalg.norm(matrix @ solution - b)) if np.all(np.isfinite(solution)) \
        else float("inf")
    if not residual <= tol * scale:
        raise NonConvergenceError(
            "Linear solve did not reach the requested residual.",
            additional_context={"residual": residual, "tolerance": tol * scale}
        )
    return ScalarField(grid, solution)


def _solve_tridiagonal(matrix: sparse.csr_matrix, b: np.ndarray) -> np.ndarray:
    n = matrix.shape[0]
    bands = np.zeros((3, n))
    bands[0, 1:] = matrix.diagonal(1)
    bands[1, :] = matrix.diagonal(0)
    bands[2, :-1] = matrix.diagonal(-1)
    return solve_banded((1, 1), bands, b, check_finite=False)


def _solve_krylov(matrix: sparse.csr_matrix, b: np.ndarray, tol: float) -> np.ndarray:
    factor = spilu(matrix.tocsc(), drop_tol=1e-6, fill_factor=20)
    preconditioner = LinearOperator(matrix.shape, matvec=factor.solve, dtype=float)
    solution, info = bicgstab(
        matrix, b, rtol=0.1 * tol, atol=0.0, maxiter=KRYLOV_MAX_ITER, M=preconditioner
    )
    if info != 0:
        raise NonConvergenceError(
            "BiCGSTAB did not converge.",
            additional_context={
                "info": info,
                "residual": float(np.linalg.norm(matrix @ solution - b)),
            }
        )
    return solution


def _solve_singular(matrix: sparse.csr_matrix, b: np.ndarray, tol: float) -> np.ndarray:
    solution, info = cg(matrix, b, rtol=0.1 * tol, atol=0.0, maxiter=KRYLOV_MAX_ITER)
    if info != 0:
        logger.debug(
            "CG on singular Neumann system stopped with info=%s", info,
            extra={"category": "LINOPS", "event": "SINGULAR_SOLVE"}
        )
    return solution - solution.mean()


@dataclass(frozen=True, eq=False)
class FluxOperator:
    """
    Discrete no-flux operator of the density equation: implicit diffusion
    plus the upwinded chemotactic flux u grad v.

    Attributes:
        grid: the grid.
        diffusion: pure-Neumann diffusion operator K (integrated form).
    """
    grid: Grid
    diffusion: SparseOperator

    def edge_fluxes(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        Integrated chemotactic flux u grad v across every edge, tail to head,
        with u taken from the upwind node of the drift grad v.
        """
        grid = self.grid
        tail, head = grid.edge_tail, grid.edge_head
        slope = v[head] - v[tail]
        return grid.edge_transmissibility * (
            np.maximum(slope, 0.0) * u[tail] - np.maximum(-slope, 0.0) * u[head]
        )

    def divergence(self, u: NodalData, v: NodalData) -> np.ndarray:
        """
        Integrated div(u grad v): the net chemotactic outflow of every cell.
        The entries sum to zero up to rounding.
        """
        grid = self.grid
        flux = self.edge_fluxes(as_nodal(grid, u), as_nodal(grid, v))
        n = grid.node_count
        return np.bincount(grid.edge_tail, flux, minlength=n) \
            - np.bincount(grid.edge_head, flux, minlength=n)

    def outflow_rates(self, v: NodalData) -> np.ndarray:
        """sum_j T_ij (v_j - v_i)^+ per node: the rate at which drift empties a cell."""
        grid = self.grid
        v = as_nodal(grid, v)
        slope = v[grid.edge_head] - v[grid.edge_tail]
        weights = grid.edge_transmissibility
        n = grid.node_count
        return np.bincount(grid.edge_tail, weights * np.maximum(slope, 0.0), minlength=n) \
            + np.bincount(grid.edge_head, weights * np.maximum(-slope, 0.0), minlength=n)

    def max_stable_dt(self, v: NodalData, limit_diffusion: bool = False) -> float:
        """
        Largest step keeping the explicit upwind update positive, with the
        safety factor applied:
        0.45 min_i w_i / sum_j T_ij (v_j - v_i)^+, of order h / max|grad v|.

        The diffusive cap h^2 / (2 n) of the full CFL formula is applied only
        with ``limit_diffusion``. Diffusion is implicit in the step, so the
        cap is not needed for positivity and is off by default.
        """
        rates = self.outflow_rates(v)
        active = rates > 0
        bound = float(np.min(self.grid.volume_weights[active] / rates[active])) \
            if np.any(active) else np.inf
        if limit_diffusion:
            bound = min(bound, self.grid.min_spacing ** 2 / (2.0 * self.grid.dimension))
        return DT_SAFETY * bound


def assemble_flux_operator(grid: Grid) -> FluxOperator:
    """Builds the no-flux density operator of the grid."""
    diffusion = SparseOperator(grid, stiffness_form(grid), BoundaryCondition.FLUX)
    return FluxOperator(grid, diffusion)
