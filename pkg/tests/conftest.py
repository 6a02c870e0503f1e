"""Shared fixtures: worked systems and random-system generators."""

import numpy as np
import pytest

from psl import analytic2, magic, model


THREE_LEVEL_GAMMA = np.array([
    [0.0, 1.0, 0.5],
    [0.0, 0.0, 0.5],
    [0.0, 0.0, 0.0],
])
BIG_GAMMA = 2.0


@pytest.fixture(scope="session")
def three_level_spec():
    return model.RelaxationSpec.uniform_dephasing(3, THREE_LEVEL_GAMMA,
                                                  BIG_GAMMA)


@pytest.fixture(scope="session")
def three_level_model(three_level_spec):
    return model.build_lindblad_model(three_level_spec,
                                      model.three_level_hamiltonians())


@pytest.fixture(scope="session")
def three_level_mo(three_level_model):
    return magic.locate_Mo(three_level_model, BIG_GAMMA)


@pytest.fixture(scope="session")
def two_level_params():
    return analytic2.TwoLevelParams(gamma_plus=1.0, gamma_minus=0.5,
                                    Gamma=2.0)


@pytest.fixture(scope="session")
def two_level_model(two_level_params):
    return model.build_lindblad_model(two_level_params.to_relaxation_spec(),
                                      model.two_level_hamiltonians())


def random_uniform_spec(rng, n_levels, gamma_scale=1.0, gamma_margin=2.0):
    """Random relaxation rates with a safely large uniform dephasing rate."""
    gam = rng.uniform(0.1, 1.0, size=(n_levels, n_levels)) * gamma_scale
    np.fill_diagonal(gam, 0.0)
    big_gamma = gamma_margin * gam.sum()
    return model.RelaxationSpec.uniform_dephasing(n_levels, gam, big_gamma)


def random_model(rng, n_levels, **kwargs):
    spec = random_uniform_spec(rng, n_levels, **kwargs)
    hams = (model.two_level_hamiltonians() if n_levels == 2
            else model.three_level_hamiltonians())
    return model.build_lindblad_model(spec, hams), spec.uniform_gamma()
