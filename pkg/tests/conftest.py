import numpy as np
import pytest

from bullwhip.demand import DemandModel, generate

FIG2 = ((1.0, 0.15), (1.0, 0.25), (1.0, 0.40))


@pytest.fixture
def fig2_demand():
    return generate(DemandModel(seasonal=FIG2, horizon=1000))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
