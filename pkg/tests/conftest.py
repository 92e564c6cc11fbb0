from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from circfn.corpus import full_corpus

settings.register_profile(
    "circfn",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("circfn")

CORPUS_SEED = 20240517


@pytest.fixture(scope="session")
def corpus():
    """100 members per surface, shared by every module that needs the full corpus."""
    return full_corpus(100, seed=CORPUS_SEED)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
