import os

from hypothesis import HealthCheck, settings
import pytest

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}
N_CRITERIA = 11


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    ran = any(str(r.nodeid).startswith("tests/test_acceptance.py") or "test_acceptance" in r.nodeid
              for reps in terminalreporter.stats.values() for r in reps if hasattr(r, "nodeid"))
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in ACCEPTANCE:
            ok, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: FAIL  did not complete")
