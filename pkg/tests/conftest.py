import numpy as np
import pytest

from irsched import ScenarioConfig
from irsched.rate import RateTable


def tiny_cfg(**kw):
    base = dict(K=4, F=2, Z=2, n_gnb=2, n_ue=2, irs_rows=1, irs_cols=8, b_irs=1, b_codebook=2, n_drops=2)
    base.update(kw)
    return ScenarioConfig(**base)


def random_table(rng, K, C, F):
    return RateTable.from_array(rng.exponential(1.0, size=(K, C, F)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny():
    return tiny_cfg()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
