import numpy as np
import pytest

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_criterion():
    def _record(number, title, passed, detail=""):
        ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}  {detail}")
