"""Executable game fixtures: the non-Doeblin counterexample, revealing games, random specs"""
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from games.spec import Belief, GameSpec

# ========== COUNTEREXAMPLE ==========
COUNTEREXAMPLE_STATES = ("0+", "0++", "0*", "1+", "1++", "1T", "1*")
FIRST_SIGNALS = ("d", "d'")
BLOCK_SIGNALS = ("zero", "zeroabs", "one", "oneabs")
BLOCK_OF = {
    "0+": "zero", "0++": "zero", "0*": "zeroabs",
    "1+": "one", "1++": "one", "1T": "one", "1*": "oneabs",
}
# player 1 moves the zero block, player 2 the one block
PLAYER1_STATES = ("0+", "0++", "0*")

# state -> action -> [(next state, first signal, probability)]
COUNTEREXAMPLE_ARCS = {
    "0+": {
        "c": [("0+", "d", 0.5), ("0++", "d'", 0.5)],
        "q": [("1++", "d", 1.0)],
    },
    "0++": {
        "c": [("0+", "d", 0.25), ("0++", "d", 0.25), ("0++", "d'", 0.5)],
        "q": [("0*", "d'", 1.0)],
    },
    "1+": {
        "c": [("1+", "d", 0.5), ("1++", "d'", 0.5)],
        "q": [("0++", "d", 1.0)],
    },
    "1++": {
        "c": [("1T", "d", 0.5), ("1++", "d'", 0.5)],
        "q": [("1*", "d'", 1.0)],
    },
    "1T": {
        "c": [("1+", "d", 0.375), ("1++", "d", 0.125), ("1++", "d'", 0.5)],
        "q": [("1*", "d'", 1.0)],
    },
    "0*": {"c": [("0*", "d", 1.0)], "q": [("0*", "d", 1.0)]},
    "1*": {"c": [("1*", "d", 1.0)], "q": [("1*", "d", 1.0)]},
}


def counterexample_signal(first, next_state):
    """Flattened label of the pair (first signal, block of the next state)"""
    return f"{first}|{BLOCK_OF[next_state]}"


def build_counterexample():
    """
    Seven-state game that is not Doeblin although every belief keeps contracting.

    Returns:
        GameSpec with I = J = {c, q} and eight flattened signals "s1|block"
    """
    states = COUNTEREXAMPLE_STATES
    actions = ("c", "q")
    signals = tuple(f"{a}|{b}" for a in FIRST_SIGNALS for b in BLOCK_SIGNALS)
    n = len(states)
    kernel = np.zeros((n, 2, 2, n, len(signals)))
    for k, label in enumerate(states):
        for i, a1 in enumerate(actions):
            for j, a2 in enumerate(actions):
                controlling = a1 if label in PLAYER1_STATES else a2
                for target, first, prob in COUNTEREXAMPLE_ARCS[label][controlling]:
                    s = signals.index(counterexample_signal(first, target))
                    kernel[k, i, j, states.index(target), s] += prob
    reward = np.zeros((n, 2, 2))
    for k, label in enumerate(states):
        if label.startswith("1"):
            reward[k] = 1.0
    return GameSpec(
        states, actions, actions, signals, kernel, reward,
        Belief.dirac(states.index("0++"), n), name="counterexample",
    )


def zero_block_belief(m):
    """0_m = 2^-m on 0++ and the rest on 0+"""
    probs = np.zeros(len(COUNTEREXAMPLE_STATES))
    probs[COUNTEREXAMPLE_STATES.index("0++")] = 2.0 ** -m
    probs[COUNTEREXAMPLE_STATES.index("0+")] = 1.0 - 2.0 ** -m
    return Belief(probs)


def one_block_belief(m):
    """1_m: even m puts 2^-m on 1++, odd m puts 2^-(m-1) on 1T, rest on 1+"""
    probs = np.zeros(len(COUNTEREXAMPLE_STATES))
    half, odd = divmod(m, 2)
    weight = 2.0 ** (-2 * half)
    probs[COUNTEREXAMPLE_STATES.index("1T" if odd else "1++")] = weight
    probs[COUNTEREXAMPLE_STATES.index("1+")] = 1.0 - weight
    return Belief(probs)


# ========== FULLY OBSERVABLE GAMES ==========
@dataclass(frozen=True)
class FullyObservableGame:
    """Finite zero-sum stochastic game with observed states"""

    states: tuple
    actions1: tuple
    actions2: tuple
    transition: np.ndarray  # (K, I, J, K)
    reward: np.ndarray  # (K, I, J)
    initial_state: int = 0

    def to_stochastic_game(self):
        from solver.stochastic_game import StochasticGame

        k, i, j = self.reward.shape
        return StochasticGame(
            reward=np.asarray(self.reward, dtype=float),
            transition=sparse.csr_matrix(np.asarray(self.transition, dtype=float).reshape(k * i * j, k)),
            initial=self.initial_state,
            labels=tuple(self.states),
        )


def build_revealing(game):
    """
    Embed a fully observable game as a hidden game whose signal is the next state
    Args:
        game: FullyObservableGame
    Returns:
        GameSpec with S = K and a Dirac initial belief on the initial state
    """
    q = np.asarray(game.transition, dtype=float)
    k = q.shape[0]
    kernel = np.zeros(q.shape + (k,))
    for target in range(k):
        kernel[:, :, :, target, target] = q[:, :, :, target]
    return GameSpec(
        tuple(game.states), tuple(game.actions1), tuple(game.actions2), tuple(game.states),
        kernel, np.asarray(game.reward, dtype=float),
        Belief.dirac(game.initial_state, k), name="revealing",
    )


def matching_pennies_game():
    """Single state, reward 1 when the actions match"""
    return FullyObservableGame(
        states=("s",), actions1=("h", "t"), actions2=("h", "t"),
        transition=np.ones((1, 2, 2, 1)),
        reward=np.eye(2).reshape(1, 2, 2),
    )


def recurrent_chain_game(p=0.3, q=0.6):
    """Two states, no choices: 0 -> 1 w.p. p, 1 -> 0 w.p. q, rewards (0, 1)"""
    transition = np.array([[1 - p, p], [q, 1 - q]]).reshape(2, 1, 1, 2)
    return FullyObservableGame(
        states=("low", "high"), actions1=("-",), actions2=("-",),
        transition=transition, reward=np.array([0.0, 1.0]).reshape(2, 1, 1),
    )


def deterministic_cycle_game():
    """Two states swapping every stage"""
    transition = np.array([[0.0, 1.0], [1.0, 0.0]]).reshape(2, 1, 1, 2)
    return FullyObservableGame(
        states=("a", "b"), actions1=("-",), actions2=("-",),
        transition=transition, reward=np.array([0.0, 1.0]).reshape(2, 1, 1),
    )


def build_blind(matrices, reward, initial=None, name="blind"):
    """
    Blind game from stochastic matrices
    Args:
        matrices: array (I, J, K, K) of row-stochastic matrices
        reward: array (K, I, J)
        initial: initial belief probabilities, uniform by default
    """
    matrices = np.asarray(matrices, dtype=float)
    n_i, n_j, k, _ = matrices.shape
    kernel = np.transpose(matrices, (2, 0, 1, 3))[..., None]
    initial = Belief.uniform(k) if initial is None else Belief(initial)
    return GameSpec(
        tuple(f"k{x}" for x in range(k)),
        tuple(f"i{x}" for x in range(n_i)),
        tuple(f"j{x}" for x in range(n_j)),
        ("none",), kernel, np.asarray(reward, dtype=float), initial, name=name,
    )


def blind_primitive_game():
    """Two states, positive matrices; player 1 pushes toward the rewarding state"""
    matrices = np.array([
        [[[0.6, 0.4], [0.3, 0.7]], [[0.5, 0.5], [0.4, 0.6]]],
        [[[0.2, 0.8], [0.1, 0.9]], [[0.7, 0.3], [0.5, 0.5]]],
    ])
    reward = np.array([
        [[0.0, 0.2], [0.1, 0.0]],
        [[1.0, 0.8], [0.9, 1.0]],
    ])
    return build_blind(matrices, reward, initial=[0.5, 0.5], name="blind-primitive")


def markov_blind_game():
    """Blind game where every matrix has a column positive in all rows but some zero entries"""
    matrices = np.array([
        [[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.5, 0.0]]],
        [[[0.0, 1.0, 0.0], [0.3, 0.4, 0.3], [0.0, 0.2, 0.8]]],
    ])
    reward = np.array([[[0.0], [0.5]], [[1.0], [0.5]], [[0.2], [0.9]]])
    return build_blind(matrices, reward, initial=[1.0, 0.0, 0.0], name="markov-blind")


def random_game(rng, k=2, i=2, j=2, s=1, positive=False, sparsity=0.3, name="random"):
    """
    Random valid GameSpec
    Args:
        rng: numpy Generator
        k, i, j, s: alphabet sizes
        positive: when True every p(k', s | k, i, j) is strictly positive
        sparsity: probability of zeroing an entry when not positive
    """
    kernel = rng.random((k, i, j, k, s)) + 1e-3
    if not positive:
        mask = rng.random(kernel.shape) < sparsity
        kernel = np.where(mask, 0.0, kernel)
        flat = kernel.reshape(k, i, j, -1)
        empty = flat.sum(axis=-1) == 0.0
        flat[empty, 0] = 1.0
        kernel = flat.reshape(k, i, j, k, s)
    kernel = kernel / kernel.sum(axis=(3, 4), keepdims=True)
    reward = rng.random((k, i, j))
    initial = rng.dirichlet(np.ones(k))
    states = tuple(f"k{x}" for x in range(k))
    return GameSpec(
        states,
        tuple(f"i{x}" for x in range(i)),
        tuple(f"j{x}" for x in range(j)),
        tuple(f"s{x}" for x in range(s)),
        kernel, reward, Belief(initial), name=name,
    )


FIXTURES = {
    "counterexample": build_counterexample,
    "revealing-matching-pennies": lambda: build_revealing(matching_pennies_game()),
    "revealing-chain": lambda: build_revealing(recurrent_chain_game()),
    "revealing-cycle": lambda: build_revealing(deterministic_cycle_game()),
    "blind-primitive": blind_primitive_game,
    "markov-blind": markov_blind_game,
}


def build_fixture(name):
    """Build a named fixture, raising KeyError with the known names"""
    try:
        factory = FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    spec = factory()
    return GameSpec(
        spec.states, spec.actions1, spec.actions2, spec.signals,
        spec.kernel, spec.reward, spec.initial_belief, name=name,
    )
