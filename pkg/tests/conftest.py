import numpy as np
import pytest

from graphsteer.priors import EmpiricalMixturePrior, GaussianPrior
from graphsteer.schedule import build_schedule
from graphsteer.state import GraphState


def random_state(rng, n, f, scale=0.8) -> GraphState:
    x = scale * rng.standard_normal((n, f))
    a = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    a[iu] = scale * rng.standard_normal(len(iu[0]))
    return GraphState(x, a + a.T)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def schedule():
    return build_schedule(40, 5e-3, 0.08)


@pytest.fixture
def gaussian_prior(schedule):
    return GaussianPrior(schedule, n_nodes=5, n_features=2, std=1.0)


@pytest.fixture
def mixture_prior(schedule, rng):
    # Clustered atoms keep the posterior over atoms mixed at moderate noise,
    # so the denoiser Jacobian stays away from zero.
    atoms = [random_state(rng, 5, 2, scale=0.15) for _ in range(3)]
    return EmpiricalMixturePrior(schedule, atoms)
