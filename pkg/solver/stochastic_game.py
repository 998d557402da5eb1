"""Finite zero-sum stochastic games in array form"""
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class StochasticGame:
    """
    reward: array (X, I, J)
    transition: sparse matrix (X*I*J, X), row (x, i, j) in C order
    initial: index of the starting state
    """

    reward: np.ndarray
    transition: sparse.csr_matrix
    initial: int = 0
    labels: tuple = field(default=())

    def __post_init__(self):
        reward = np.asarray(self.reward, dtype=float)
        if reward.ndim != 3:
            raise ValueError("reward must have shape (X, I, J)")
        transition = sparse.csr_matrix(self.transition)
        n_rows = reward.shape[0] * reward.shape[1] * reward.shape[2]
        if transition.shape != (n_rows, reward.shape[0]):
            raise ValueError(f"transition shape {transition.shape} != {(n_rows, reward.shape[0])}")
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "transition", transition)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"x{x}" for x in range(reward.shape[0])))

    @property
    def n_states(self):
        return self.reward.shape[0]

    @property
    def shape(self):
        return self.reward.shape

    def expected(self, w):
        """Σ_x' p(x'|x,i,j) w(x') as an (X, I, J) array"""
        return (self.transition @ np.asarray(w, dtype=float)).reshape(self.reward.shape)


@dataclass(frozen=True)
class ValueFunction:
    """Values per state plus the horizon or discount they were computed for"""

    values: np.ndarray
    tag: str
    labels: tuple = ()

    def at(self, x):
        return float(self.values[x])

    def to_dict(self):
        labels = self.labels or tuple(f"x{x}" for x in range(len(self.values)))
        return {label: float(v) for label, v in zip(labels, self.values)}
