"""Shared fixtures for the test suite"""
import numpy as np
import pytest

from games.fixtures import (
    build_blind,
    build_counterexample,
    build_fixture,
    build_revealing,
    matching_pennies_game,
    random_game,
    recurrent_chain_game,
)
from games.spec import Belief, GameSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def counterexample():
    return build_counterexample()


@pytest.fixture
def blind_primitive():
    return build_fixture("blind-primitive")


@pytest.fixture
def revealing_chain():
    return build_revealing(recurrent_chain_game())


@pytest.fixture
def revealing_pennies():
    return build_revealing(matching_pennies_game())


@pytest.fixture
def make_random_game(rng):
    """random_game bound to the seeded generator"""

    def factory(**kwargs):
        return random_game(rng, **kwargs)

    return factory


@pytest.fixture
def constant_game():
    """One state, one signal, constant reward"""

    def factory(value=0.7, n_actions1=1, n_actions2=1):
        kernel = np.ones((1, n_actions1, n_actions2, 1, 1))
        reward = np.full((1, n_actions1, n_actions2), value)
        return GameSpec(
            ("k",), tuple(f"i{x}" for x in range(n_actions1)), tuple(f"j{x}" for x in range(n_actions2)),
            ("s",), kernel, reward, Belief.dirac(0, 1), name="constant",
        )

    return factory


@pytest.fixture
def blind_from():
    """Blind game with one row-stochastic matrix per action pair"""

    def factory(*matrices, n_actions1=1):
        stacked = np.array(matrices, dtype=float)
        n_j = len(matrices) // n_actions1
        k = stacked.shape[-1]
        stacked = stacked.reshape(n_actions1, n_j, k, k)
        return build_blind(stacked, np.zeros((k, n_actions1, n_j)))

    return factory
