"""
Structured grids of intervals and rectangles, nodal fields living on them,
quadrature, and numerical estimates of the domain constants entering the
trace and Gagliardo-Nirenberg inequalities.


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
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.linalg import eigvalsh
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from chemolab.constants import (
    DENSE_BOUNDARY_LIMIT, EIGEN_MAX_ITER, GN_RANDOM_FIELDS, GN_SEED, TRACE_SCAN_POINTS
)
from chemolab.enum import DomainKind
from chemolab.exceptions import (
    ConfigurationError, DomainError, NonConvergenceError, NumericalError
)

logger = logging.getLogger(__name__)

_constant_cache: Dict[tuple, float] = {}
_cache_lock = threading.Lock()


@dataclass(frozen=True)
class DomainSpec:
    """
    Axis-aligned computational domain.

    Attributes:
        kind: interval or rectangle.
        lower: lower bound per axis.
        upper: upper bound per axis.
    """
    kind: DomainKind
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        dimension = 1 if self.kind is DomainKind.INTERVAL else 2
        lower = tuple(float(value) for value in np.atleast_1d(self.lower))
        upper = tuple(float(value) for value in np.atleast_1d(self.upper))
        if len(lower) != dimension or len(upper) != dimension:
            raise ConfigurationError(
                f"extents: a {self.kind.value} needs {dimension} lower/upper "
                f"bound(s), got {lower} and {upper}"
            )
        for axis, (low, high) in enumerate(zip(lower, upper)):
            if not (math.isfinite(low) and math.isfinite(high)) or high <= low:
                raise ConfigurationError(
                    f"extents: axis {axis} is degenerate ({low}, {high})"
                )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def interval(cls, lower: float = 0.0, upper: float = 1.0) -> DomainSpec:
        """Returns the interval [lower, upper]."""
        return cls(DomainKind.INTERVAL, (lower,), (upper,))

    @classmethod
    def rectangle(
            cls, lower: Sequence[float] = (0.0, 0.0), upper: Sequence[float] = (1.0, 1.0)
    ) -> DomainSpec:
        """Returns the rectangle [lower[0], upper[0]] x [lower[1], upper[1]]."""
        return cls(DomainKind.RECTANGLE, tuple(lower), tuple(upper))

    @property
    def dimension(self) -> int:
        """Space dimension n."""
        return len(self.lower)

    @property
    def lengths(self) -> Tuple[float, ...]:
        """Side lengths."""
        return tuple(high - low for low, high in zip(self.lower, self.upper))

    @property
    def measure(self) -> float:
        """|Omega|."""
        return float(np.prod(self.lengths))

    @property
    def boundary_measure(self) -> float:
        """|dOmega|: number of endpoints of an interval, perimeter of a rectangle."""
        if self.kind is DomainKind.INTERVAL:
            return 2.0
        return 2.0 * sum(self.lengths)


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True, eq=False)
class Grid:
    """
    Uniform tensor-product grid.

    Nodes are numbered lexicographically with the last axis running fastest,
    i.e. node (i, j) of a rectangle has index ``i * resolution[1] + j``.

    Attributes:
        domain: the discretized domain.
        resolution: nodes per axis.
        spacing: mesh width per axis.
        axes: 1D node coordinates per axis.
        node_coordinates: (node_count, dimension) array of node positions.
        boundary_index: indices of the boundary nodes, ascending.
        outward_normals: unit outward normal of every boundary node,
            aligned with ``boundary_index``.
        volume_weights: trapezoidal quadrature weights for integrals over Omega.
        boundary_weights: quadrature weights for integrals over dOmega
            (zero at interior nodes).
        edge_tail, edge_head: node pairs joined by a grid edge.
        edge_transmissibility: face measure over edge length of every edge.
        edge_axis: axis along which each edge runs.
    """
    domain: DomainSpec
    resolution: Tuple[int, ...]
    spacing: Tuple[float, ...]
    axes: Tuple[np.ndarray, ...]
    node_coordinates: np.ndarray
    boundary_index: np.ndarray
    outward_normals: np.ndarray
    volume_weights: np.ndarray
    boundary_weights: np.ndarray
    edge_tail: np.ndarray
    edge_head: np.ndarray
    edge_transmissibility: np.ndarray
    edge_axis: np.ndarray

    @property
    def kind(self) -> DomainKind:
        """Domain kind."""
        return self.domain.kind

    @property
    def dimension(self) -> int:
        """Space dimension n."""
        return self.domain.dimension

    @property
    def shape(self) -> Tuple[int, ...]:
        """Array shape of a nodal field."""
        return self.resolution

    @property
    def node_count(self) -> int:
        """Total number of nodes."""
        return int(np.prod(self.resolution))

    @property
    def min_spacing(self) -> float:
        """Smallest mesh width."""
        return min(self.spacing)

    @property
    def max_spacing(self) -> float:
        """Largest mesh width, the h of error estimates."""
        return max(self.spacing)

    @property
    def key(self) -> tuple:
        """Hashable identity of the grid, used to cache grid constants."""
        return (
            self.domain.kind.value, self.domain.lower, self.domain.upper, self.resolution
        )

    @property
    def is_boundary(self) -> np.ndarray:
        """Boolean mask of boundary nodes."""
        mask = np.zeros(self.node_count, dtype=bool)
        mask[self.boundary_index] = True
        return mask

    def normal_of(self, node: int) -> Optional[np.ndarray]:
        """Returns the outward normal of a boundary node, or None for interior nodes."""
        position = np.searchsorted(self.boundary_index, node)
        if position < len(self.boundary_index) and self.boundary_index[position] == node:
            return self.outward_normals[position]
        return None

    def boundary_arclength(self) -> np.ndarray:
        """
        Normalized arclength parameter s in [0, 1) of every boundary node,
        aligned with ``boundary_index``.

        The interval has s = 0 at its left end and s = 1 at its right end.
        The rectangle boundary is walked counterclockwise starting at its
        lower-left corner.
        """
        coords = self.node_coordinates[self.boundary_index]
        if self.kind is DomainKind.INTERVAL:
            lower, = self.domain.lower
            length, = self.domain.lengths
            return (coords[:, 0] - lower) / length

        (x0, y0), (x1, y1) = self.domain.lower, self.domain.upper
        width, height = self.domain.lengths
        perimeter = 2.0 * (width + height)
        x, y = coords[:, 0], coords[:, 1]
        tol = 1e-12 * max(width, height)
        arclength = np.where(
            np.abs(y - y0) <= tol, x - x0,
            np.where(
                np.abs(x - x1) <= tol, width + (y - y0),
                np.where(
                    np.abs(y - y1) <= tol, width + height + (x1 - x),
                    2.0 * width + height + (y1 - y)
                )
            )
        )
        return arclength / perimeter


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Nodal values of a function on a grid.

    Values are copied on construction and frozen; every field is finite.
    """
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.node_count,):
            raise ConfigurationError(
                f"values: expected {self.grid.node_count} nodal values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError(
                "Field contains non-finite values.",
                additional_context={"nonfinite_nodes": np.flatnonzero(~np.isfinite(values))}
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> ScalarField:
        """Returns the constant field."""
        return cls(grid, np.full(grid.node_count, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, function: Callable[..., np.ndarray]) -> ScalarField:
        """Samples a vectorized function of the node coordinates (one argument per axis)."""
        coords = [grid.node_coordinates[:, axis] for axis in range(grid.dimension)]
        return cls(grid, np.broadcast_to(function(*coords), (grid.node_count,)))

    def with_values(self, values: np.ndarray) -> ScalarField:
        """Returns a new field on the same grid."""
        return ScalarField(self.grid, values)

    def reshaped(self) -> np.ndarray:
        """Values as an array of the grid shape."""
        return self.values.reshape(self.grid.shape)

    def min(self) -> float:
        """Smallest nodal value."""
        return float(self.values.min())

    def max(self) -> float:
        """Largest nodal value."""
        return float(self.values.max())

    def __sub__(self, other: ScalarField) -> ScalarField:
        return self.with_values(self.values - other.values)


def build_grid(domain_spec: DomainSpec, resolution: Union[int, Sequence[int]]) -> Grid:
    """
    Builds a uniform grid of the domain.

    :param domain_spec: domain to discretize.
    :param resolution: nodes per axis; a single integer is used for every axis.
    :raises ConfigurationError: if any axis has fewer than 3 nodes.
    """
    dimension = domain_spec.dimension
    resolution = tuple(int(n) for n in np.broadcast_to(np.atleast_1d(resolution), (dimension,)))
    for axis, nodes in enumerate(resolution):
        if nodes < 3:
            raise ConfigurationError(
                f"resolution: axis {axis} needs at least 3 nodes, got {nodes}"
            )

    spacing = tuple(
        (high - low) / (nodes - 1)
        for low, high, nodes in zip(domain_spec.lower, domain_spec.upper, resolution)
    )
    axes = tuple(
        np.linspace(low, high, nodes)
        for low, high, nodes in zip(domain_spec.lower, domain_spec.upper, resolution)
    )
    weights_1d = [_trapezoid_weights(nodes, h) for nodes, h in zip(resolution, spacing)]

    if dimension == 1:
        grid = _build_interval(domain_spec, resolution, spacing, axes, weights_1d[0])
    else:
        grid = _build_rectangle(domain_spec, resolution, spacing, axes, weights_1d)

    logger.debug(
        "Built %s grid with resolution %s (spacing %s)",
        domain_spec.kind.value, resolution, spacing,
        extra={"category": "MESH", "event": "BUILD"}
    )
    return grid


def _trapezoid_weights(nodes: int, spacing: float) -> np.ndarray:
    weights = np.full(nodes, spacing)
    weights[0] = weights[-1] = 0.5 * spacing
    return weights


def _freeze(*arrays: np.ndarray):
    for array in arrays:
        array.setflags(write=False)


def _build_interval(domain_spec, resolution, spacing, axes, weights) -> Grid:
    nodes, = resolution
    h, = spacing
    boundary_index = np.array([0, nodes - 1])
    boundary_weights = np.zeros(nodes)
    boundary_weights[boundary_index] = 1.0
    tail = np.arange(nodes - 1)
    arrays = dict(
        node_coordinates=axes[0].reshape(-1, 1).copy(),
        boundary_index=boundary_index,
        outward_normals=np.array([[-1.0], [1.0]]),
        volume_weights=weights,
        boundary_weights=boundary_weights,
        edge_tail=tail,
        edge_head=tail + 1,
        edge_transmissibility=np.full(nodes - 1, 1.0 / h),
        edge_axis=np.zeros(nodes - 1, dtype=int),
    )
    _freeze(*arrays.values())
    return Grid(domain=domain_spec, resolution=resolution, spacing=spacing, axes=axes, **arrays)


# pylint: disable=too-many-locals
def _build_rectangle(domain_spec, resolution, spacing, axes, weights_1d) -> Grid:
    nx, ny = resolution
    hx, hy = spacing
    wx, wy = weights_1d
    index = np.arange(nx * ny).reshape(nx, ny)
    x, y = np.meshgrid(axes[0], axes[1], indexing="ij")

    boundary_weights = np.zeros((nx, ny))
    boundary_weights[:, 0] += wx
    boundary_weights[:, -1] += wx
    boundary_weights[0, :] += wy
    boundary_weights[-1, :] += wy

    normals = np.zeros((nx, ny, 2))
    normals[:, 0, 1] -= 1.0
    normals[:, -1, 1] += 1.0
    normals[0, :, 0] -= 1.0
    normals[-1, :, 0] += 1.0
    boundary_mask = np.zeros((nx, ny), dtype=bool)
    boundary_mask[[0, -1], :] = True
    boundary_mask[:, [0, -1]] = True
    boundary_index = index[boundary_mask]
    boundary_normals = normals.reshape(-1, 2)[boundary_index]
    boundary_normals /= np.linalg.norm(boundary_normals, axis=1, keepdims=True)

    x_tail = index[:-1, :].ravel()
    y_tail = index[:, :-1].ravel()
    x_transmissibility = np.broadcast_to(wy / hx, (nx - 1, ny)).ravel()
    y_transmissibility = np.broadcast_to((wx / hy)[:, None], (nx, ny - 1)).ravel()

    arrays = dict(
        node_coordinates=np.column_stack([x.ravel(), y.ravel()]),
        boundary_index=boundary_index,
        outward_normals=boundary_normals,
        volume_weights=np.outer(wx, wy).ravel(),
        boundary_weights=boundary_weights.ravel(),
        edge_tail=np.concatenate([x_tail, y_tail]),
        edge_head=np.concatenate([x_tail + ny, y_tail + 1]),
        edge_transmissibility=np.concatenate([x_transmissibility, y_transmissibility]),
        edge_axis=np.concatenate([
            np.zeros(x_tail.size, dtype=int), np.ones(y_tail.size, dtype=int)
        ]),
    )
    _freeze(*arrays.values())
    return Grid(domain=domain_spec, resolution=resolution, spacing=spacing, axes=axes, **arrays)


def integrate(field: ScalarField) -> float:
    """Integral over Omega by the trapezoidal rule."""
    return float(field.grid.volume_weights @ field.values)


def boundary_integrate(field: ScalarField) -> float:
    """Integral over dOmega (a sum of endpoint values on an interval)."""
    return float(field.grid.boundary_weights @ field.values)


def lp_norm(field: ScalarField, p: float) -> float:
    """
    Discrete L^p(Omega) norm.

    :param p: exponent in [1, inf]; ``math.inf`` gives the maximum norm.
    :raises DomainError: if p < 1.
    """
    if p == math.inf:
        return float(np.max(np.abs(field.values)))
    if not p >= 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    return float((field.grid.volume_weights @ np.abs(field.values) ** p) ** (1.0 / p))


def stiffness_form(grid: Grid, face_diffusivity: Optional[np.ndarray] = None) -> sparse.csr_matrix:
    """
    Matrix K of the discrete Dirichlet form f -> sum_e T_e a_e (f_head - f_tail)^2.

    K is the weighted pure-Neumann diffusion operator: symmetric, nonpositive
    off the diagonal, and every row sums to zero.

    :param face_diffusivity: diffusivity per edge; unit diffusivity when omitted.
    """
    coefficient = grid.edge_transmissibility
    if face_diffusivity is not None:
        coefficient = coefficient * face_diffusivity
    tail, head, n = grid.edge_tail, grid.edge_head, grid.node_count
    rows = np.concatenate([tail, head, tail, head])
    cols = np.concatenate([tail, head, head, tail])
    data = np.concatenate([coefficient, coefficient, -coefficient, -coefficient])
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def gradient_energy(field: ScalarField) -> float:
    """Discrete ||grad f||^2 in L^2(Omega), the quadratic form of the stiffness matrix."""
    grid = field.grid
    jumps = field.values[grid.edge_head] - field.values[grid.edge_tail]
    return float(grid.edge_transmissibility @ jumps ** 2)


def h1_norm(field: ScalarField) -> float:
    """Discrete H^1(Omega) norm (||f||^2 + ||grad f||^2)^(1/2)."""
    return math.sqrt(lp_norm(field, 2) ** 2 + gradient_energy(field))


def gradient(field: ScalarField) -> np.ndarray:
    """
    Pointwise gradient, shape (node_count, dimension): centred differences
    inside, one-sided differences at the boundary.
    """
    grid = field.grid
    if grid.dimension == 1:
        return np.gradient(field.values, grid.spacing[0]).reshape(-1, 1)
    components = np.gradient(field.reshaped(), *grid.spacing)
    return np.column_stack([component.ravel() for component in components])


def second_difference_norm(field: ScalarField) -> float:
    """
    L^2 norm of the discrete second differences of a field along every axis,
    taken over the nodes where the centred stencil is defined.
    """
    grid = field.grid
    values = field.reshaped()
    weights = grid.volume_weights.reshape(grid.shape)
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        upper = np.take(values, range(2, grid.shape[axis]), axis=axis)
        middle = np.take(values, range(1, grid.shape[axis] - 1), axis=axis)
        lower = np.take(values, range(0, grid.shape[axis] - 2), axis=axis)
        second = (upper - 2.0 * middle + lower) / h ** 2
        total += float(np.sum(np.take(weights, range(1, grid.shape[axis] - 1), axis=axis)
                              * second ** 2))
    return math.sqrt(total)


def trace_epsilon_constant(eps: float, trace_constant: float) -> float:
    """c1(eps) = C_T^4 / (4 eps) + eps of the epsilon-form of the trace inequality."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return trace_constant ** 4 / (4.0 * eps) + eps


def gn_prefactor(gn_constant: float, dimension: int) -> float:
    """C4 = C_GN max{1, C_GN^(n/2)}."""
    return gn_constant * max(1.0, gn_constant ** (dimension / 2.0))


def gn_epsilon_constant(eps: float, gn_constant: float, dimension: int) -> float:
    """c1'(eps) = C4 (1 + eps^(-n/2)) of the epsilon-form of the GN inequality."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return gn_prefactor(gn_constant, dimension) * (1.0 + eps ** (-dimension / 2.0))


def check_trace_inequality(field: ScalarField, eps: float, trace_constant: float):
    """
    Both sides of ||f||^2_{L2(dOmega)} <= eps ||grad f||^2 + c1(eps) ||f||^2.

    :return: (lhs, rhs)
    """
    grid = field.grid
    lhs = float(grid.boundary_weights @ field.values ** 2)
    rhs = eps * gradient_energy(field) \
        + trace_epsilon_constant(eps, trace_constant) * lp_norm(field, 2) ** 2
    return lhs, rhs


def check_gn_inequality(field: ScalarField, eps: float, gn_constant: float):
    """
    Both sides of ||f||^2 <= eps ||grad f||^2 + c1'(eps) ||f||_1^2.

    :return: (lhs, rhs)
    """
    lhs = lp_norm(field, 2) ** 2
    rhs = eps * gradient_energy(field) \
        + gn_epsilon_constant(eps, gn_constant, field.grid.dimension) * lp_norm(field, 1) ** 2
    return lhs, rhs


def _cached(kind: str, grid: Grid, compute: Callable[[], float]) -> float:
    key = (kind, grid.key)
    with _cache_lock:
        if key in _constant_cache:
            return _constant_cache[key]
    value = compute()
    with _cache_lock:
        _constant_cache[key] = value
    return value


def estimate_trace_constant(grid: Grid, max_iter: int = EIGEN_MAX_ITER) -> float:
    """
    Smallest C_T with ||f||_{L2(dOmega)} <= C_T ||f||^(1/2) ||f||_{H1}^(1/2)
    for every discrete f on the grid.

    Writing ||f|| ||f||_{H1} = min_s (s ||f||^2 + ||f||_{H1}^2 / s) / 2 turns
    the supremum of the quotient into max_s 2 theta(s), where theta(s) is the
    largest eigenvalue of B x = theta ((s + 1/s) M + K / s) x with B, M, K the
    boundary mass, volume mass and stiffness matrices. B only charges
    boundary nodes, so the eigenproblem is solved on the boundary block.

    The value is cached per grid.

    :raises NonConvergenceError: if the eigen iteration or the maximisation
        over s does not converge within ``max_iter`` iterations.
    """
    return _cached("trace", grid, lambda: _estimate_trace_constant(grid, max_iter))


def _estimate_trace_constant(grid: Grid, max_iter: int) -> float:
    mass = sparse.diags(grid.volume_weights)
    stiffness = stiffness_form(grid)
    boundary = grid.boundary_index
    root_weights = np.sqrt(grid.boundary_weights[boundary])

    def theta(s: float) -> float:
        operator = ((s + 1.0 / s) * mass + stiffness / s).tocsc()
        return _largest_boundary_eigenvalue(operator, boundary, root_weights, max_iter)

    log_h = math.log10(grid.min_spacing)
    scan = np.unique(np.concatenate([np.logspace(-3.0, 1.7 - log_h, TRACE_SCAN_POINTS), [1.0]]))
    quotients = np.array([2.0 * theta(s) for s in scan])
    best = int(np.argmax(quotients))
    bracket = (
        math.log(scan[max(best - 1, 0)]), math.log(scan[min(best + 1, len(scan) - 1)])
    )
    result = minimize_scalar(
        lambda log_s: -2.0 * theta(math.exp(log_s)), bounds=bracket, method="bounded",
        options={"xatol": 1e-8, "maxiter": max_iter}
    )
    if not result.success:
        raise NonConvergenceError(
            "Trace constant maximisation over s did not converge.",
            additional_context={"bracket": bracket, "message": result.message}
        )
    squared = max(float(quotients[best]), float(-result.fun))
    value = math.sqrt(squared)
    if not math.isfinite(value) or value < 1e-12:
        raise NumericalError(f"Trace constant estimate is not usable: {value}")

    logger.info(
        "Estimated C_T = %.6f on %s grid %s",
        value, grid.kind.value, grid.resolution,
        extra={"category": "MESH", "event": "TRACE_CONSTANT"}
    )
    return value


def _largest_boundary_eigenvalue(operator, boundary, root_weights, max_iter) -> float:
    factor = splu(operator)
    node_count = operator.shape[0]
    boundary_count = len(boundary)

    if boundary_count <= DENSE_BOUNDARY_LIMIT:
        unit = np.zeros((node_count, boundary_count))
        unit[boundary, np.arange(boundary_count)] = root_weights
        block = root_weights[:, None] * factor.solve(unit)[boundary, :]
        return float(eigvalsh(0.5 * (block + block.T))[-1])

    def matvec(vector):
        padded = np.zeros(node_count)
        padded[boundary] = root_weights * np.ravel(vector)
        return root_weights * factor.solve(padded)[boundary]

    reduced = LinearOperator((boundary_count, boundary_count), matvec=matvec, dtype=float)
    try:
        eigenvalues = eigsh(reduced, k=1, which="LA", maxiter=max_iter, tol=1e-12,
                            return_eigenvectors=False)
    except ArpackNoConvergence as error:
        raise NonConvergenceError(
            "Boundary eigenvalue iteration did not converge.",
            additional_context={
                "max_iter": max_iter, "converged_eigenvalues": error.eigenvalues
            }
        ) from error
    return float(eigenvalues[-1])


def estimate_gn_constant(
        grid: Grid, n_random: int = GN_RANDOM_FIELDS, seed: int = GN_SEED
) -> float:
    """
    Numerical estimate of C_GN in
    ||f||^2 <= C_GN ||grad f||^(2 theta) ||f||_1^(2 (1 - theta)) + C_GN ||f||_1^2,
    theta = n / (n + 2), for nonnegative discrete f.

    The estimate is the largest ratio over constants, single-node spikes,
    exponentials and Gaussians anchored at the corners, the boundary midpoints
    and the centre with widths from the mesh width to the domain diameter,
    and seeded random nonnegative fields. The value is cached per grid.
    """
    return _cached("gn", grid, lambda: _estimate_gn_constant(grid, n_random, seed))


def _gn_ratio(fields: np.ndarray, grid: Grid) -> np.ndarray:
    theta = grid.dimension / (grid.dimension + 2.0)
    squares = fields ** 2 @ grid.volume_weights
    l1 = np.abs(fields) @ grid.volume_weights
    jumps = fields[:, grid.edge_head] - fields[:, grid.edge_tail]
    energy = jumps ** 2 @ grid.edge_transmissibility
    return squares / (energy ** theta * l1 ** (2.0 * (1.0 - theta)) + l1 ** 2)


def _gn_anchors(grid: Grid) -> np.ndarray:
    lower = np.array(grid.domain.lower)
    upper = np.array(grid.domain.upper)
    centre = 0.5 * (lower + upper)
    choices = [np.array([low, mid, high]) for low, mid, high in zip(lower, centre, upper)]
    return np.array(np.meshgrid(*choices, indexing="ij")).reshape(grid.dimension, -1).T


def _estimate_gn_constant(grid: Grid, n_random: int, seed: int) -> float:
    theta = grid.dimension / (grid.dimension + 2.0)
    weights = grid.volume_weights
    diagonal = stiffness_form(grid).diagonal()
    spikes = weights / (diagonal ** theta * weights ** (2.0 * (1.0 - theta)) + weights ** 2)
    best = {"spike": float(spikes.max()), "constant": 1.0 / grid.domain.measure}

    diameter = float(np.linalg.norm(grid.domain.lengths))
    widths = np.logspace(math.log10(0.25 * grid.min_spacing), math.log10(diameter), 24)
    for anchor in _gn_anchors(grid):
        distance = np.linalg.norm(grid.node_coordinates - anchor, axis=1)
        exponentials = np.exp(-distance[None, :] / widths[:, None])
        gaussians = np.exp(-0.5 * (distance[None, :] / widths[:, None]) ** 2)
        for family, fields in (("exponential", exponentials), ("gaussian", gaussians)):
            best[family] = max(best.get(family, 0.0), float(_gn_ratio(fields, grid).max()))

    rng = np.random.default_rng(seed)
    noise = rng.uniform(0.0, 1.0, size=(n_random, grid.node_count))
    stiffness = stiffness_form(grid)
    smoothed = noise.copy()
    for _ in range(2):
        smoothed = smoothed - 0.5 * (stiffness @ smoothed.T).T / diagonal
    for family, fields in (("noise", noise), ("smoothed-noise", smoothed),
                           ("squared-noise", noise ** 4)):
        best[family] = float(_gn_ratio(fields, grid).max())

    family, value = max(best.items(), key=lambda item: item[1])
    logger.info(
        "Estimated C_GN = %.6f on %s grid %s (attained by %s fields)",
        value, grid.kind.value, grid.resolution, family,
        extra={"category": "MESH", "event": "GN_CONSTANT"}
    )
    return value
