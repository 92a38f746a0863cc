import sys
import random

import pytest

from metaminer.eventlog import EventLog


def make_log(*seqs, name="log"):
    """Log from strings like "abc" (one activity per character) or lists of labels."""
    return EventLog.from_sequences([list(s) for s in seqs], name=name)


def random_sequences(rng: random.Random, n_traces: int, alphabet="abcde", max_len=6):
    return ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len))) for _ in range(n_traces)]


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
