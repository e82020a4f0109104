"""
Run configuration.

A run is described by a single flat ``key = value`` file (UTF-8, ``#``
comments, comma-separated vectors). Every key is a field of
:class:`RunConfig`; ``lambda`` stands for the ``lambda_`` field.


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
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np
from jinja2 import BaseLoader, Environment

from chemolab.constants import (
    CONFIG_ECHO_TEMPLATE, DEFAULT_MONITOR_ALPHA, FP_MAX_ITER, FP_TOL, NEWTON_DAMPING_MIN,
    NEWTON_MAX_ITER, NEWTON_TOL_RESIDUAL, NEWTON_TOL_STEP, ORACLE_TOL
)
from chemolab.enum import BoundaryProfileKind, DomainKind, InitialProfileKind
from chemolab.exceptions import ChemolabError, ConfigurationError
from chemolab.mesh import DomainSpec, Grid, ScalarField, build_grid
from chemolab.params import BoundaryProfile, ModelParams, NewtonConfig

logger = logging.getLogger(__name__)

KEYWORD_ALIASES = {"lambda": "lambda_"}


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text}")


def _parse_vector(item: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(text: str) -> tuple:
        return tuple(item(part.strip()) for part in text.split(",") if part.strip())
    return parse


def _format(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(item) for item in value)
    return repr(value) if isinstance(value, float) else str(value)


def _option(default, parse: Callable[[str], Any]):
    return field(default=default, metadata={"parse": parse})


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True)
class RunConfig:
    """
    Everything a run needs: model parameters, solver controls, the initial
    density, time integration and output settings.

    ``lower``, ``upper`` and ``resolution`` may be left empty; they then
    default to the unit interval or square at 201 nodes per axis.
    """
    # Model.
    lambda_: float = _option(1.0, float)
    mu: float = _option(1.0, float)
    gamma: float = _option(0.05, float)
    g_kind: BoundaryProfileKind = _option(BoundaryProfileKind.CONSTANT, BoundaryProfileKind)
    g_value: float = _option(1.0, float)
    g_slope: float = _option(0.0, float)
    g_amplitude: float = _option(0.0, float)
    g_center: float = _option(0.5, float)
    g_width: float = _option(0.25, float)
    # Domain and grid.
    domain: DomainKind = _option(DomainKind.INTERVAL, DomainKind)
    lower: Tuple[float, ...] = _option((), _parse_vector(float))
    upper: Tuple[float, ...] = _option((), _parse_vector(float))
    resolution: Tuple[int, ...] = _option((), _parse_vector(int))
    # Steady-state solvers.
    newton_tol_residual: float = _option(NEWTON_TOL_RESIDUAL, float)
    newton_tol_step: float = _option(NEWTON_TOL_STEP, float)
    newton_max_iter: int = _option(NEWTON_MAX_ITER, int)
    newton_damping_min: float = _option(NEWTON_DAMPING_MIN, float)
    fp_tol: float = _option(FP_TOL, float)
    fp_max_iter: int = _option(FP_MAX_ITER, int)
    relaxation: float = _option(1.0, float)
    # Initial density.
    u0_kind: InitialProfileKind = _option(InitialProfileKind.COSINE, InitialProfileKind)
    u0_baseline: float = _option(1.0, float)
    u0_amplitude: float = _option(0.5, float)
    u0_center: float = _option(0.5, float)
    u0_width: float = _option(0.1, float)
    # Time integration.
    t_end: float = _option(10.0, float)
    dt: float = _option(1e-3, float)
    sample_every: float = _option(0.1, float)
    snapshot_times: Tuple[float, ...] = _option((), _parse_vector(float))
    monitor_alpha: float = _option(DEFAULT_MONITOR_ALPHA, float)
    # Sweeps, oracles and outputs.
    n_inits: int = _option(10, int)
    gamma_grid: Tuple[float, ...] = _option((0.01, 0.05, 0.1, 0.2, 0.3), _parse_vector(float))
    oracle_compare: bool = _option(False, _parse_bool)
    oracle_tol: float = _option(ORACLE_TOL, float)
    seed: int = _option(0, int)
    output_dir: str = _option("output", str)

    def __post_init__(self):
        dimension = 1 if self.domain is DomainKind.INTERVAL else 2
        defaults = {"lower": (0.0,) * dimension, "upper": (1.0,) * dimension,
                    "resolution": (201,) * dimension}
        for name, default in defaults.items():
            if not getattr(self, name):
                object.__setattr__(self, name, default)
        if len(self.resolution) == 1 and dimension == 2:
            object.__setattr__(self, "resolution", self.resolution * 2)
        if self.n_inits < 1:
            raise ConfigurationError(f"n_inits must be at least 1, got {self.n_inits}")
        if not self.gamma_grid:
            raise ConfigurationError("gamma_grid must name at least one gamma")

    @classmethod
    def from_mapping(cls, entries: Mapping[str, str]) -> RunConfig:
        """
        Builds a configuration from raw ``key -> text`` entries.

        :raises ConfigurationError: on unknown keys or unparsable values.
        """
        options = {option.name: option for option in dataclasses.fields(cls)}
        values = {}
        for key, text in entries.items():
            name = KEYWORD_ALIASES.get(key, key)
            if name not in options:
                raise ConfigurationError(
                    f"Unknown configuration key: {key}", additional_context={"key": key}
                )
            try:
                values[name] = options[name].metadata["parse"](text)
            except ValueError as error:
                raise ConfigurationError(
                    f"Invalid value for {key}: {text!r}",
                    additional_context={"key": key, "value": text}
                ) from error
        return cls(**values)

    def domain_spec(self) -> DomainSpec:
        """The configured domain."""
        return DomainSpec(self.domain, self.lower, self.upper)

    def grid(self) -> Grid:
        """The configured grid."""
        return build_grid(self.domain_spec(), self.resolution)

    def boundary_profile(self) -> BoundaryProfile:
        """The configured boundary coefficient g."""
        return BoundaryProfile(
            kind=self.g_kind, value=self.g_value, slope=self.g_slope,
            amplitude=self.g_amplitude, center=self.g_center, width=self.g_width
        )

    def to_params(self) -> ModelParams:
        """Model and solver parameters of this run."""
        return ModelParams(
            lambda_=self.lambda_, mu=self.mu, gamma=self.gamma,
            g_spec=self.boundary_profile(),
            domain_spec=self.domain_spec(),
            newton_cfg=NewtonConfig(
                tol_residual=self.newton_tol_residual, tol_step=self.newton_tol_step,
                max_iter=self.newton_max_iter, damping_min=self.newton_damping_min
            ),
            fp_tol=self.fp_tol, fp_max_iter=self.fp_max_iter, relaxation=self.relaxation,
        )

    def initial_density(self, grid: Grid) -> ScalarField:
        """
        The configured u0 on the grid. Coordinates are normalized to [0, 1]
        per axis before the profile is evaluated:

        * constant: baseline,
        * cosine: baseline + amplitude * prod cos(pi x_k),
        * gaussian-bump: baseline + amplitude * exp(-|x - center|^2 / (2 width^2)),
        * perturbed-constant: baseline * (1 + amplitude * xi), xi uniform on
          [-1, 1] per node, drawn from ``seed``.

        :raises ConfigurationError: if u0 is not positive.
        """
        lower = np.asarray(grid.domain.lower)
        lengths = np.asarray(grid.domain.lengths)
        unit = (grid.node_coordinates - lower) / lengths
        kind = self.u0_kind
        if kind is InitialProfileKind.CONSTANT:
            values = np.full(grid.node_count, self.u0_baseline)
        elif kind is InitialProfileKind.COSINE:
            values = self.u0_baseline + self.u0_amplitude * np.prod(np.cos(np.pi * unit), axis=1)
        elif kind is InitialProfileKind.GAUSSIAN_BUMP:
            distance = np.sum((unit - self.u0_center) ** 2, axis=1)
            values = self.u0_baseline + self.u0_amplitude * np.exp(
                -distance / (2.0 * self.u0_width ** 2)
            )
        else:
            noise = np.random.default_rng(self.seed).uniform(-1.0, 1.0, grid.node_count)
            values = self.u0_baseline * (1.0 + self.u0_amplitude * noise)
        if not values.min() > 0:
            raise ConfigurationError(
                f"Initial density {kind.value} is not positive (min {values.min():.6g}).",
                additional_context={"u0_kind": kind.value}
            )
        return ScalarField(grid, values)

    def entries(self) -> Dict[str, Any]:
        """Effective values keyed by their configuration file names."""
        inverse = {name: key for key, name in KEYWORD_ALIASES.items()}
        return {
            inverse.get(option.name, option.name): getattr(self, option.name)
            for option in dataclasses.fields(self)
        }

    def render(self) -> str:
        """The configuration echo, itself a valid configuration file."""
        template = Environment(loader=BaseLoader).from_string(CONFIG_ECHO_TEMPLATE)
        return template.render(entries=[(key, _format(value)) for key, value in self.entries().items()])


def parse_config(text: str) -> RunConfig:
    """
    Parses configuration file content.

    :raises ConfigurationError: on malformed lines, duplicated or unknown
        keys and invalid values.
    """
    entries = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"Line {number} is not a `key = value` pair: {raw_line!r}",
                additional_context={"line": number}
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigurationError(
                f"Duplicated configuration key: {key}", additional_context={"key": key}
            )
        entries[key] = value
    return RunConfig.from_mapping(entries)


def load_config(path: str, overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Loads a configuration file; ``overrides`` replace file entries.

    :raises ConfigurationError: if the file cannot be read or parsed.
    """
    try:
        with open(path, encoding="utf-8") as file:
            text = file.read()
    except (OSError, UnicodeDecodeError) as error:
        raise ConfigurationError(
            f"Cannot read configuration file {path}: {error}", additional_context={"path": path}
        ) from error

    config = parse_config(text)
    if overrides:
        entries = {key: _format(value) for key, value in config.entries().items()}
        entries.update(overrides)
        config = RunConfig.from_mapping(entries)
    logger.info("Loaded configuration %s", path, extra={"category": "CLI", "event": "CONFIG"})
    return config


def validate(config: RunConfig) -> RunConfig:
    """
    Builds the parameter objects once so that invalid values surface as
    configuration errors before any computation starts.
    """
    try:
        config.to_params()
        config.initial_density(config.grid())
    except ConfigurationError:
        raise
    except ChemolabError as error:
        raise ConfigurationError(error.message, error.additional_context) from error
    return config
