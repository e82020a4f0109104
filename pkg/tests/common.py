"""
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
import json
import math
import os
import pathlib

import numpy as np

from chemolab.mesh import DomainSpec, ScalarField, build_grid
from chemolab.params import BoundaryProfile, ModelParams
from chemolab.persistence import OracleStore

CWD = str(pathlib.Path(__file__).parent.absolute())
DEFAULT_CONFIG = os.path.join(os.path.dirname(CWD), "configs", "default_1d.cfg")
DATA_DIR = os.path.join(CWD, "data")

SQRT2 = math.sqrt(2.0)


def frozen_oracle(name):
    """The stored reference profile and its recorded tolerances."""
    with open(os.path.join(DATA_DIR, "oracle", "references.json"), encoding="utf-8") as file:
        record = json.load(file)[name]
    return OracleStore(DATA_DIR).load(name), record


def interval_grid(resolution=101, lower=0.0, upper=1.0):
    return build_grid(DomainSpec.interval(lower, upper), resolution)


def square_grid(resolution=11, lower=(0.0, 0.0), upper=(1.0, 1.0)):
    return build_grid(DomainSpec.rectangle(lower, upper), resolution)


def make_params(gamma=0.5, lambda_=1.0, mu=1.0, g=1.0, domain_spec=None, **kwargs):
    return ModelParams(
        lambda_=lambda_, mu=mu, gamma=gamma, g_spec=BoundaryProfile.constant(g),
        domain_spec=domain_spec or DomainSpec.interval(), **kwargs
    )


def cosine_density(grid, baseline=1.0, amplitude=0.5):
    return ScalarField.from_function(grid, lambda x: baseline + amplitude * np.cos(np.pi * x))


def observed_order(errors, resolutions):
    """Least-squares slope of log(error) against log(h)."""
    spacing = [1.0 / (n - 1) for n in resolutions]
    slope, _ = np.polyfit(np.log(spacing), np.log(errors), 1)
    return slope
