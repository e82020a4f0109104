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
from unittest.mock import Mock

import pytest

from chemolab.evolve import TrajectorySample
from chemolab.publisher import Publisher


def make_sample(t):
    return TrajectorySample(
        t=t, l1_u=1.0, l2_u=1.0, linf_u=1.5, min_u=0.5, min_v=0.01, max_v=0.04, y_sub=0.5
    )


@pytest.fixture
def progress_log():
    return Mock()


def test_registered_subscriber_receives_published_samples(progress_log):
    publisher = Publisher()
    publisher.register(progress_log)

    publisher.notify(make_sample(0.1))

    progress_log.assert_called_once_with(make_sample(0.1))


def test_registering_twice_keeps_a_single_subscription(progress_log):
    publisher = Publisher(subscribers=[progress_log])

    publisher.register(progress_log)
    publisher.notify(make_sample(0.0))

    assert progress_log.call_count == 1


@pytest.mark.parametrize("candidate", [None, 3, "log"])
def test_non_callable_subscribers_are_rejected(candidate):
    with pytest.raises(ValueError):
        Publisher().register(candidate)


def test_samples_reach_subscribers_in_registration_order():
    received = []
    publisher = Publisher()
    for name in ("csv", "console"):
        publisher.register(lambda sample, name=name: received.append((name, sample.t)))

    for t in (0.0, 0.5):
        publisher.notify(make_sample(t))

    assert received == [("csv", 0.0), ("console", 0.0), ("csv", 0.5), ("console", 0.5)]


def test_failing_subscriber_is_logged_and_the_others_still_run(caplog):
    broken, healthy = Mock(side_effect=RuntimeError("disk full")), Mock()
    publisher = Publisher(subscribers=[broken, healthy])

    publisher.notify(make_sample(1.0))

    healthy.assert_called_once_with(make_sample(1.0))
    errors = [record for record in caplog.records if record.levelname == "ERROR"]
    assert len(errors) == 1
    assert errors[0].event == "NOTIFY"
