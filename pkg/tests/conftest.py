import json
import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

HERE = Path(__file__).parent


@pytest.fixture(scope="session")
def calibration() -> dict:
    """Constants frozen by scripts/calibrate.py."""
    return json.loads((HERE / "calibration.json").read_text())


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def accept():
    """Record the PASS/FAIL line for one acceptance criterion."""

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
