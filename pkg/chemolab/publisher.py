"""
Publisher/subscriber used to stream trajectory samples out of a running
simulation.


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
import logging
from typing import Callable, List, Optional

logger = logging.getLogger(__name__)


class Publisher:
    """Minimal publish-subscribe hub."""

    def __init__(self, subscribers: Optional[List[Callable]] = None):
        self._subscribers = list(subscribers or [])

    def register(self, subscriber: Callable):
        """
        Registers a subscriber to be notified of new samples.

        Subscribers are called synchronously, in registration order, from
        the simulating thread, so they should return quickly.

        :param subscriber: callback receiving the published args/kwargs.
        :raises ValueError: if the subscriber is not callable.
        """
        if not callable(subscriber):
            raise ValueError(f"Subscriber to register is not callable: {subscriber}")

        if subscriber not in self._subscribers:
            self._subscribers.append(subscriber)

    def notify(self, *args, **kwargs):
        """
        Calls every subscriber with the given arguments.

        A failing subscriber is logged and skipped.
        """
        for subscriber in list(self._subscribers):
            try:
                subscriber(*args, **kwargs)
            except Exception:  # pylint: disable=broad-except
                logger.exception(
                    "An error occurred notifying subscriber %s.", subscriber,
                    extra={"category": "EVOLVE", "event": "NOTIFY"}
                )
