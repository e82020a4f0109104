"""
Oracle persistence.

Reference profiles are persisted to disk so that acceptance runs compare
against frozen oracle outputs instead of regenerating them.


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
import os
from typing import Dict, Optional

import numpy as np

from chemolab.constants import ORACLE_DIRECTORY
from chemolab.oracle import OracleProfile
from chemolab.serialization import read_columns_csv, write_columns_csv

logger = logging.getLogger(__name__)

QUANTITIES = ("U", "V", "W")


class OracleStore:
    """Saves/loads oracle profiles to/from field CSV files."""

    def __init__(self, output_dir: str):
        self._directory = os.path.join(output_dir, ORACLE_DIRECTORY)

    @property
    def directory(self) -> str:
        """Directory holding the stored profiles."""
        return self._directory

    def _paths(self, name: str) -> Dict[str, str]:
        return {
            quantity: os.path.join(self._directory, f"{name}_{quantity}.csv")
            for quantity in QUANTITIES
        }

    def load(self, name: str) -> Optional[OracleProfile]:
        """Returns the profile stored under name, or None if it was never
        stored or if its files cannot be parsed."""
        present = {
            quantity: path for quantity, path in self._paths(name).items()
            if os.path.isfile(path)
        }
        if not present:
            return None

        profiles = {}
        try:
            for quantity, path in present.items():
                header, columns = read_columns_csv(path)
                if header != ["x", "value"]:
                    raise ValueError(f"Unexpected header {header}")
                profiles["x"] = columns[0]
                profiles[quantity] = columns[1]
        except (OSError, ValueError, IndexError):
            logger.exception(
                "Unexpected error parsing oracle profile %s in %s", name, self._directory,
                extra={"category": "ORACLE", "event": "LOAD"}
            )
            return None

        return OracleProfile(**profiles)

    def save(self, name: str, profile: OracleProfile):
        """Saves every available quantity of the profile to disk."""
        os.makedirs(self._directory, exist_ok=True)
        for quantity, path in self._paths(name).items():
            values = getattr(profile, quantity)
            if values is not None:
                write_columns_csv(path, ["x", "value"], [profile.x, np.asarray(values)])

    def remove(self, name: str):
        """Removes the stored profile, if it exists."""
        paths = [path for path in self._paths(name).values() if os.path.isfile(path)]
        if not paths:
            logger.warning(
                "Oracle profile %s not found when trying to remove it from %s",
                name, self._directory, extra={"category": "ORACLE", "event": "REMOVE"}
            )
        for path in paths:
            os.remove(path)
