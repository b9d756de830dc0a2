import functools

import pytest
from hypothesis import HealthCheck, settings

from wzw_invariants.modular_data import build_modular_data
from wzw_invariants.weights import AlgebraContext

# derandomized so repeated runs draw identical examples
settings.register_profile("ci", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@functools.lru_cache(maxsize=32)
def modular(r, k):
    return build_modular_data(AlgebraContext(r, k))


@pytest.fixture
def md():
    return modular


# one pass/fail line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def record(n, ok, detail=""):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
