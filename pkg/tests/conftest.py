import numpy as np
import pytest

ACCEPTANCE_RESULTS = {}


class ForcedRng:
    """Stand-in generator whose uniform draws always take the success branch."""

    def random(self):
        return 0.0


@pytest.fixture
def forced_rng():
    return ForcedRng()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")
