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
import os
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pytest

from chemolab.oracle import OracleProfile
from chemolab.persistence import OracleStore


@pytest.fixture
def temp_dir() -> str:
    with TemporaryDirectory(suffix=__name__) as temp_dir:
        yield f"{temp_dir}"


@pytest.fixture
def profile() -> OracleProfile:
    x = np.linspace(0.0, 1.0, 5)
    return OracleProfile(x=x, U=1.0 + x, V=0.1 * x, W=np.exp(-x))


def test_load(temp_dir: str):
    os.makedirs(os.path.join(temp_dir, "oracle"))
    with open(os.path.join(temp_dir, "oracle", "coupled_steady_V.csv"), "w") as f:
        f.write("x,value\n0,0.25\n0.5,0.125\n1,0.25\n")

    stored = OracleStore(output_dir=temp_dir).load("coupled_steady")

    np.testing.assert_array_equal(stored.x, [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(stored.V, [0.25, 0.125, 0.25])
    assert stored.U is None
    assert stored.W is None


def test_load_returns_none_when_nothing_was_stored(temp_dir: str):
    assert OracleStore(output_dir=temp_dir).load("coupled_steady") is None


def test_load_returns_none_and_logs_error_when_file_contains_invalid_values(temp_dir, caplog):
    os.makedirs(os.path.join(temp_dir, "oracle"))
    with open(os.path.join(temp_dir, "oracle", "signal_V.csv"), "w") as f:
        f.write("x,value\n0,zero\n")

    stored = OracleStore(output_dir=temp_dir).load("signal")

    assert not stored
    assert len([r for r in caplog.records if r.levelname == "ERROR"]) == 1


def test_load_returns_none_when_file_has_an_unexpected_header(temp_dir):
    os.makedirs(os.path.join(temp_dir, "oracle"))
    with open(os.path.join(temp_dir, "oracle", "signal_V.csv"), "w") as f:
        f.write("x,y,value\n0,0,1\n")

    assert not OracleStore(output_dir=temp_dir).load("signal")


def test_save(temp_dir: str, profile: OracleProfile):
    store = OracleStore(output_dir=temp_dir)
    store.save("coupled_steady", profile)

    for quantity in ("U", "V", "W"):
        with open(os.path.join(store.directory, f"coupled_steady_{quantity}.csv")) as f:
            lines = f.read().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 6

    stored = store.load("coupled_steady")
    np.testing.assert_array_equal(stored.W, profile.W)
    np.testing.assert_array_equal(stored.x, profile.x)


def test_save_only_writes_available_quantities(temp_dir: str):
    store = OracleStore(output_dir=temp_dir)
    store.save("signal", OracleProfile(x=np.array([0.0, 1.0]), V=np.array([0.5, 0.5])))

    assert sorted(os.listdir(store.directory)) == ["signal_V.csv"]


def test_remove(temp_dir: str):
    store = OracleStore(output_dir=temp_dir)
    os.makedirs(store.directory)
    stored_file_path = Path(store.directory) / "signal_V.csv"
    stored_file_path.touch()
    assert stored_file_path.is_file()

    store.remove("signal")

    assert not stored_file_path.exists()


def test_remove_logs_a_warning_when_profile_was_not_found(temp_dir: str, caplog):
    OracleStore(output_dir=temp_dir).remove("signal")

    assert len(caplog.records) == 1
    assert len([r for r in caplog.records if r.levelname == "WARNING"]) == 1
