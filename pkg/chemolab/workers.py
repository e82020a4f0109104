"""
Concurrent execution of independent solver jobs (parameter sweeps,
uniqueness sweeps) on a thread pool driven by asyncio.


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
import asyncio
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

from chemolab.constants import THREADS_ENV_VAR

logger = logging.getLogger(__name__)

Job = Callable[[], Any]


def thread_cap() -> int:
    """
    Maximum number of concurrent jobs: the value of CHEMOLAB_THREADS when it
    holds a positive integer, the machine parallelism otherwise.
    """
    default = os.cpu_count() or 1
    raw_value = os.environ.get(THREADS_ENV_VAR)
    if raw_value is None:
        return default
    try:
        value = int(raw_value)
    except ValueError:
        value = 0
    if value < 1:
        logger.warning(
            "Ignoring invalid %s=%r, using %d threads", THREADS_ENV_VAR, raw_value, default,
            extra={"category": "WORKERS", "event": "THREAD_CAP"}
        )
        return default
    return value


async def gather_jobs(jobs: Sequence[Job], max_workers: Optional[int] = None) -> List[Any]:
    """
    Runs the jobs on a thread pool and waits for all of them.

    :return: one entry per job, in job order: the job's return value, or the
        exception it raised.
    """
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max_workers or thread_cap()) as executor:
        futures = [loop.run_in_executor(executor, job) for job in jobs]
        return await asyncio.gather(*futures, return_exceptions=True)


def _run_sequentially(jobs: Sequence[Job]) -> List[Any]:
    outcomes = []
    for job in jobs:
        try:
            outcomes.append(job())
        except Exception as error:  # pylint: disable=broad-except
            outcomes.append(error)
    return outcomes


def run_jobs(jobs: Sequence[Job], max_workers: Optional[int] = None) -> List[Any]:
    """
    Blocking form of :func:`gather_jobs`.

    When called from a thread that already runs an event loop the jobs are
    executed sequentially in that thread, with the same result layout.
    """
    if not jobs:
        return []
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return asyncio.run(gather_jobs(jobs, max_workers))

    logger.debug(
        "Event loop already running, executing %d job(s) sequentially", len(jobs),
        extra={"category": "WORKERS", "event": "SEQUENTIAL"}
    )
    return _run_sequentially(jobs)
