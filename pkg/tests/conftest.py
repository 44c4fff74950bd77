import numpy as np
import pytest

from hamlink.functional import make_context

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def ctx6():
    """Power-law example potential with M=6, n0=3, b=1, beta=3 (λ_min = 1)."""
    return make_context(6, 1.0, 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion, passed, detail):
        _ACCEPTANCE.append((criterion, bool(passed), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
