import numpy as np
import pytest

from dpnarx.benchmarks import synthetic_dataset, synthetic_truth
from dpnarx.narx import build_regressors, fit_full_pnarx


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def truth():
    return synthetic_truth()


@pytest.fixture(scope="session")
def noisy_record():
    """Noisy identification record and its clean twin (4000 samples, 40 dB)."""
    return synthetic_dataset(4000, 40.0, seed=0)


@pytest.fixture(scope="session")
def clean_record():
    return synthetic_dataset(4000, None, seed=0)[1]


@pytest.fixture(scope="session")
def held_out_record():
    return synthetic_dataset(4000, None, seed=1)[1]


@pytest.fixture(scope="session")
def clean_fit(clean_record, truth):
    tab = build_regressors(clean_record, truth.cfg)
    return tab, fit_full_pnarx(tab, truth.cfg).polynomial


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the run summary."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
