import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, text: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {text}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
