import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

# filled by test_acceptance.py: criterion number -> (passed, line)
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num][1])
    passed = sum(1 for ok, _ in ACCEPTANCE.values() if ok)
    terminalreporter.write_line(f"{passed}/{len(ACCEPTANCE)} criteria passed")
