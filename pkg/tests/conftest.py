import numpy as np
import pytest

from binagg.aggregation import prepare
from binagg.gdp import RandomSource
from binagg.pipeline import FitConfig
from binagg.privtree import Box
from binagg.simulate import SimulationConfig


@pytest.fixture(scope="session")
def coverage_report():
    """One 2000-repetition coverage study shared by the statistical tests.

    Runs the d=5, n=1000, total-budget-1 protocol once per session; several
    tests read different columns of the same report.
    """
    from binagg.experiments import coverage_experiment

    cfg = SimulationConfig(
        n=1000,
        d=5,
        sigma=1.0,
        repetitions=2000,
        base_seed=1,
        fit=FitConfig(total_mu=1.0),
    )
    return coverage_experiment(cfg)


def small_prepared(seed=7, n=600, d=2, mu_c=0.5, min_count=2):
    """A fixed PreparedBins instance on a deterministic 2-d dataset."""
    rng = RandomSource(seed, stream=0).generator
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = X @ np.full(d, 1.5) + rng.normal(0.0, 0.2, size=n)
    bins = [
        Box((0.0, 0.0), (0.5, 0.5)),
        Box((0.5, 0.0), (1.0, 0.5)),
        Box((0.0, 0.5), (0.5, 1.0)),
        Box((0.5, 0.5), (1.0, 1.0)),
    ]
    if d == 1:
        bins = [Box((0.0,), (0.5,)), Box((0.5,), (1.0,))]
    label_bound = float(np.max(np.abs(y))) + 0.5
    return prepare(
        X,
        y,
        bins,
        mu_c=mu_c,
        label_bound=label_bound,
        rng=RandomSource(seed, stream=1),
        min_count=min_count,
    )


@pytest.fixture
def prepared_2d():
    return small_prepared()
