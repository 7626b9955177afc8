import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def bits64(prefix: str):
    """A 64-bit vector whose leading bits spell ``prefix``, zero elsewhere."""
    from mchd.hdcore import Hypervector

    bits = np.zeros(64, dtype=np.uint8)
    bits[: len(prefix)] = [int(c) for c in prefix]
    return Hypervector.from_bits(bits)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def gate():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(criterion: str, ok: bool, detail: str) -> None:
        line = f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
