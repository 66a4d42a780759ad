import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from affsphere.fixtures import excusp1_pair, excusp2_pair, get_fixture

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def ex1():
    return excusp1_pair()


@pytest.fixture(scope="session")
def ex2():
    return excusp2_pair()


@pytest.fixture(scope="session")
def fx1():
    return get_fixture("excusp1")


@pytest.fixture(scope="session")
def fx2():
    return get_fixture("excusp2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(str(k).rstrip("abc")), str(k))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
