import functools
from pathlib import Path

import numpy as np
import pytest

from helars.coordinates import DesignBlock
from helars.datasets import ingest, simulate, standardize
from helars.models import make_model
from helars.selection import run_helars

DATA = Path(__file__).parent / "data"
DIABETES = DATA / "diabetes.data"

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def prepared(dataset, model_name, scale=True):
    if scale:
        dataset = standardize(dataset, center_response=(model_name == "normal"))
    return dataset, DesignBlock(dataset.X), make_model(model_name, dataset.n)


@functools.lru_cache(maxsize=None)
def diabetes_path(model_name):
    ds = ingest(DIABETES, "Y", model_name)
    return run_helars(*prepared(ds, model_name))


@functools.lru_cache(maxsize=None)
def simulated_path(seed, n=200, d=3, correlated=False):
    return run_helars(*prepared(simulate(n, d, seed, correlated=correlated), "truncnorm"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_xi(rng, n, lo=-3.0, hi=3.0, tlo=-5.0, thi=-0.2):
    return np.concatenate([rng.uniform(lo, hi, n), [rng.uniform(tlo, thi)]])
