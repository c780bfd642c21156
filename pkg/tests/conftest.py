import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from staticalloc.algograph import lift_to_semilattice
from staticalloc.datasets import chain_architecture, load_dataset, paper_ids

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def bundled():
    return load_dataset("paper")


@pytest.fixture(scope="session")
def bundled_lifted(bundled):
    return lift_to_semilattice(bundled.graph)


@pytest.fixture(scope="session")
def ids():
    return paper_ids()


@pytest.fixture(scope="session")
def chain1(bundled):
    return chain_architecture(1, bundled.link_table)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; a failed check still fails the test."""
    def record(number: int, title: str, ok: bool, detail: str = ""):
        ACCEPTANCE[number] = (title, ok, detail)
        print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} {detail}")
        assert ok, f"criterion {number} ({title}) failed: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} {detail}")
