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

import pytest

from chemolab.constants import THREADS_ENV_VAR
from chemolab.workers import gather_jobs, run_jobs, thread_cap


def failing_job():
    raise RuntimeError("job failed")


def test_thread_cap_reads_the_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "3")
    assert thread_cap() == 3


@pytest.mark.parametrize("raw_value", ["0", "-2", "many"])
def test_thread_cap_ignores_invalid_values(monkeypatch, caplog, raw_value):
    monkeypatch.setenv(THREADS_ENV_VAR, raw_value)

    assert thread_cap() == (os.cpu_count() or 1)
    assert len([r for r in caplog.records if r.levelname == "WARNING"]) == 1


def test_thread_cap_defaults_to_machine_parallelism(monkeypatch):
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    assert thread_cap() == (os.cpu_count() or 1)


def test_run_jobs_keeps_job_order_and_collects_exceptions():
    outcomes = run_jobs([lambda: 1, failing_job, lambda: 3], max_workers=2)

    assert outcomes[0] == 1
    assert isinstance(outcomes[1], RuntimeError)
    assert outcomes[2] == 3


def test_run_jobs_without_jobs_returns_an_empty_list():
    assert run_jobs([]) == []


@pytest.mark.asyncio
async def test_gather_jobs_runs_jobs_on_the_pool():
    outcomes = await gather_jobs([lambda: "a", lambda: "b"], max_workers=2)
    assert outcomes == ["a", "b"]


@pytest.mark.asyncio
async def test_run_jobs_inside_a_running_event_loop_runs_sequentially():
    outcomes = run_jobs([lambda: 1, failing_job])

    assert outcomes[0] == 1
    assert isinstance(outcomes[1], RuntimeError)
