import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anomkin.model import ModelCase

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CASES = [ModelCase.heavy_tail(2.5), ModelCase.degenerate(0.5)]


@pytest.fixture(params=CASES, ids=["heavy_tail", "degenerate"])
def case(request):
    return request.param


def rel_linf(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / np.max(np.abs(b)))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
