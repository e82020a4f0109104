"""
Field, trajectory and report serialization.

Every float is written with 17 significant digits so that files are
round-trip exact and byte-identical across runs with the same inputs.


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

import csv
import json
import math
from enum import Enum
from typing import Any, List, Sequence, Tuple

import numpy as np

from chemolab.constants import TRAJECTORY_COLUMNS
from chemolab.mesh import ScalarField


def format_float(value: float) -> str:
    """17 significant digits, `nan`/`inf`/`-inf` for non-finite values."""
    return format(float(value), ".17g")


def write_columns_csv(path: str, header: Sequence[str], columns: Sequence[np.ndarray]):
    """Writes equally long columns under the given header."""
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format_float(value) for value in row])


def read_columns_csv(path: str) -> Tuple[List[str], List[np.ndarray]]:
    """
    Reads a CSV file of floats.

    :return: the header and one array per column.
    :raises ValueError: on empty files, ragged rows or unparsable values.
    """
    with open(path, encoding="utf-8", newline="") as file:
        rows = list(csv.reader(file))
    if not rows:
        raise ValueError(f"Empty CSV file: {path}")
    header, body = rows[0], rows[1:]
    if any(len(row) != len(header) for row in body):
        raise ValueError(f"Ragged rows in CSV file: {path}")
    table = np.array([[float(value) for value in row] for row in body], dtype=float)
    table = table.reshape(len(body), len(header))
    return header, [table[:, column] for column in range(len(header))]


def field_header(field: ScalarField) -> List[str]:
    """`x,value` on an interval, `x,y,value` on a rectangle."""
    return ["x", "y", "value"][-(field.grid.dimension + 1):]


def write_field_csv(path: str, field: ScalarField):
    """One node per row, in node index order."""
    coordinates = field.grid.node_coordinates
    columns = [coordinates[:, axis] for axis in range(field.grid.dimension)]
    write_columns_csv(path, field_header(field), columns + [field.values])


def write_trajectory_csv(path: str, rows: Sequence[Sequence[float]]):
    """One trajectory sample per row, NaN where no steady reference was given."""
    write_columns_csv(path, TRAJECTORY_COLUMNS, list(zip(*rows)) if rows else [])


def to_document(value: Any) -> Any:
    """
    Converts reports into JSON-compatible objects: numpy values become
    Python numbers, NaN becomes null and infinities become the strings
    "inf" and "-inf".
    """
    if isinstance(value, dict):
        return {str(key): to_document(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_document(item) for item in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if value is None or isinstance(value, str):
        return value
    return str(value)


def dumps_document(document: Any) -> str:
    """Deterministic JSON text of a report."""
    return json.dumps(to_document(document), indent=2, allow_nan=False) + "\n"


def write_document(path: str, document: Any):
    """Writes a report as JSON."""
    with open(path, "w", encoding="utf-8") as file:
        file.write(dumps_document(document))
