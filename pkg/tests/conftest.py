import numpy as np
import pytest

from socopt.ev_charging import EVChargingParams, build_ev_game
from socopt.games import estimate_constants
from socopt.graphs import complete_graph, metropolis_graph
from socopt.oracles import example1_game


@pytest.fixture(scope="session")
def example1():
    """(spec, quad, constants) for the two-player benchmark game."""
    spec, quad = example1_game()
    constants = estimate_constants(quad, spec.strategy_sets, spec.theta_set,
                                   theta_probe_radius=1e-3)
    return spec, quad, constants


@pytest.fixture(scope="session")
def example1_graph():
    return complete_graph(2)


@pytest.fixture(scope="session")
def ev_game():
    """(spec, quad, constants, params) for the charging game, scalar strategies."""
    params = EVChargingParams()
    spec, quad = build_ev_game(params)
    constants = estimate_constants(quad, params.strategy_sets(),
                                   params.theta_set(), theta_probe_radius=1e-4)
    return spec, quad, constants, params


@pytest.fixture(scope="session")
def ev_graph():
    return metropolis_graph(10, 1.0 / 3.0, rng_seed=7)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
