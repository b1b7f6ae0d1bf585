"""Shared fixtures, notably the expensive Monte Carlo runs reused across modules."""

import pytest
from hypothesis import HealthCheck, settings

from rmtlab import ExperimentConfig, four_phase, ginibre, run_clt_experiment

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("suite")

# One shared configuration for the large-ensemble runs: the fluctuation,
# variance-difference, expectation and kurtosis checks all read from the
# same two result objects, so the eigenvalue work is paid once per ensemble.
MC_N = 256
MC_REPLICAS = 4000
MC_SEED = 20260823
MC_FUNCTIONS = ["z_cutoff", "abs2_cutoff", "radial_bump"]


def _mc_run(dist):
    cfg = ExperimentConfig(
        experiment="clt-run",
        n=MC_N,
        distribution=dist,
        functions=list(MC_FUNCTIONS),
        replicas=MC_REPLICAS,
        base_seed=MC_SEED,
    )
    return run_clt_experiment(cfg)


@pytest.fixture(scope="session")
def ginibre_run():
    """4000 replicas of the n=256 Gaussian ensemble (built once, ~minutes)."""
    return _mc_run(ginibre())


@pytest.fixture(scope="session")
def four_phase_run():
    """4000 replicas of the n=256 four-phase ensemble (built once, ~minutes)."""
    return _mc_run(four_phase())


def stat_for(result, label):
    """Pull the SummaryStats with the given label out of an ExperimentResult."""
    for s in result.stats:
        if s.label == label:
            return s
    raise KeyError(label)
