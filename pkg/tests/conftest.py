import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from nilic.instance import NilInstance
from nilic.pmts import generate

settings.register_profile("nilic", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nilic")


@pytest.fixture
def j2():
    return generate("jordan(2, 0, '1')")


@pytest.fixture
def j2j2():
    return generate("tensor(jordan(2, 0, '1'), jordan(2, 0, '2'))")


@pytest.fixture
def diag_j2():
    return generate("diag(jordan(2, 0, '1'), ['1', '2'])")


@pytest.fixture
def zero_single():
    return NilInstance(["1"], {"1": [[0, 0], [0, 0]]})


@pytest.fixture
def zero_pair():
    return NilInstance(["1", "2"], {"1": [[0] * 3] * 3, "2": [[0] * 3] * 3})


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
