import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Collects one PASS/FAIL line per criterion; echoed in the terminal summary."""

    def log(name, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
