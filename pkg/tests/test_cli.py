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
import logging

import pytest

from chemolab import cli
from chemolab.cli import run_cli
from chemolab.enum import ExitCode, Subcommand
from tests.common import DEFAULT_CONFIG

SMALL_RUN = [
    "--set", "resolution=21", "--set", "t_end=0.2", "--set", "dt=0.01",
    "--set", "sample_every=0.1", "--set", "snapshot_times=0.1",
    "--set", "n_inits=2", "--set", "gamma_grid=0.05, 0.1",
]


@pytest.fixture(autouse=True)
def detach_cli_log_handler():
    yield
    package_logger = logging.getLogger("chemolab")
    for handler in list(package_logger.handlers):
        if getattr(handler, "chemolab_cli", False):
            package_logger.removeHandler(handler)
    package_logger.setLevel(logging.NOTSET)


def run(subcommand, output_dir, *extra):
    return run_cli([subcommand, "-c", DEFAULT_CONFIG, "-o", str(output_dir)] + SMALL_RUN + list(extra))


def read_json(path):
    with open(path, encoding="utf-8") as file:
        return json.load(file)


def test_missing_config_file_exits_with_usage_error_and_writes_nothing(tmp_path, capsys):
    output_dir = tmp_path / "out"

    code = run_cli(["steady", "-c", str(tmp_path / "missing.cfg"), "-o", str(output_dir)])

    assert code == ExitCode.USAGE_ERROR
    assert not output_dir.exists()
    assert '"error": "ConfigurationError"' in capsys.readouterr().err


def test_unknown_override_key_is_a_usage_error(tmp_path):
    assert run("steady", tmp_path, "--set", "kappa=1") == ExitCode.USAGE_ERROR


def test_malformed_override_is_a_usage_error(tmp_path):
    assert run("steady", tmp_path, "--set", "gamma") == ExitCode.USAGE_ERROR


def test_unknown_subcommand_is_a_usage_error():
    assert run_cli(["simulate-everything"]) == ExitCode.USAGE_ERROR


def test_version_exits_successfully(capsys):
    assert run_cli(["--version"]) == ExitCode.SUCCESS
    assert capsys.readouterr().out.startswith("chemolab ")


def test_steady_writes_fields_report_and_config_echo(tmp_path):
    assert run("steady", tmp_path) == ExitCode.SUCCESS

    for name in ("U", "V", "W"):
        assert (tmp_path / f"steady_{name}.csv").read_text().startswith("x,value\n")
    assert read_json(tmp_path / "steady_report.json")["passed"] is True
    assert (tmp_path / "steady_summary.txt").read_text().startswith("steady-state bounds: PASS")
    assert "resolution = 21\n" in (tmp_path / "config.cfg").read_text()


def test_numerical_failure_exits_with_code_three_and_writes_error_document(tmp_path):
    code = run("steady", tmp_path, "--set", "fp_max_iter=1")

    assert code == ExitCode.NUMERICAL_FAILURE
    document = read_json(tmp_path / "error.json")
    assert document["error"] == "NonConvergenceError"
    assert "update_history" in document["context"]


def test_constants_above_the_thresholds_are_flagged(tmp_path, caplog):
    assert run("constants", tmp_path, "--set", "gamma=3") == ExitCode.SUCCESS

    constants = read_json(tmp_path / "constants.json")
    assert constants["F1_at_gamma"] < 0
    assert "F1(gamma) <= 0: gamma >= 2 / ||g||_inf" in constants["flags"]
    assert "gamma above the uniqueness threshold gamma*" in constants["flags"]
    assert len([r for r in caplog.records if r.levelname == "WARNING"]) >= 2


def test_evolve_writes_trajectory_and_snapshots(tmp_path):
    assert run("evolve", tmp_path) == ExitCode.SUCCESS

    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,l1_u,l2_u")
    assert len(lines) == 1 + 3
    assert (tmp_path / "snapshot_t0.1_u.csv").is_file()
    assert read_json(tmp_path / "evolve_report.json")["samples"] == 3


def test_sweep_gamma_writes_one_entry_per_gamma(tmp_path):
    assert run("sweep-gamma", tmp_path) == ExitCode.SUCCESS

    document = read_json(tmp_path / "sweep_gamma.json")
    assert [entry["gamma"] for entry in document["entries"]] == [0.05, 0.1]
    for entry in document["entries"]:
        assert entry["sweep"]["converged"] == [0, 1]
        assert entry["sweep"]["below_gamma_star"] is True


def test_oracle_stores_profiles_and_checks_their_bounds(tmp_path):
    assert run("oracle", tmp_path, "--set", "resolution=51") == ExitCode.SUCCESS

    assert (tmp_path / "oracle" / "coupled_steady_U.csv").is_file()
    assert read_json(tmp_path / "oracle_report.json")["title"] == "oracle bounds"


def test_oracle_on_a_rectangle_is_a_usage_error(tmp_path):
    code = run("oracle", tmp_path, "--set", "domain=rectangle", "--set", "lower=", "--set", "upper=")

    assert code == ExitCode.USAGE_ERROR
    assert read_json(tmp_path / "error.json")["error"] == "ConfigurationError"


def test_unusable_output_directory_is_a_usage_error(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")

    code = run("constants", blocker / "out")

    assert code == ExitCode.USAGE_ERROR
    assert '"error": "NotADirectoryError"' in capsys.readouterr().err


def test_unexpected_error_exits_with_code_three_and_writes_error_document(tmp_path, monkeypatch):
    def broken_handler(_):
        raise ZeroDivisionError("division by zero in a handler")

    monkeypatch.setitem(cli.HANDLERS, Subcommand.CONSTANTS, broken_handler)

    code = run("constants", tmp_path)

    assert code == ExitCode.NUMERICAL_FAILURE
    document = read_json(tmp_path / "error.json")
    assert document["error"] == "ZeroDivisionError"
    assert document["message"] == "division by zero in a handler"
