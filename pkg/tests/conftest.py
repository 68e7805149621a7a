import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from screenlab import make_scaled_beta, make_truncated_normal, make_uniform  # noqa: E402


@pytest.fixture(scope="session")
def u12():
    return make_uniform(1.0, 2.0)


@pytest.fixture(scope="session")
def u01():
    return make_uniform(0.0, 1.0)


@pytest.fixture(scope="session")
def builtins():
    return [
        make_uniform(1.0, 2.0),
        make_uniform(0.0, 1.0),
        make_truncated_normal(1.5, 1.0, 1.0, 2.0),
        make_truncated_normal(0.3, 0.4, 0.0, 1.0),
        make_scaled_beta(1.0, 1.0, 1.0, 2.0),
        make_scaled_beta(0.7, 1.0, 0.0, 1.0),
        make_scaled_beta(0.8, 0.9, 1.0, 3.0),
    ]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
