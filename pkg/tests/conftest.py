import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vesselstudy import builtin_fixture


@pytest.fixture(scope="session")
def ac_vessel():
    return builtin_fixture("ac_vessel")


@pytest.fixture(scope="session")
def dc_vessel():
    return builtin_fixture("dc_vessel")
