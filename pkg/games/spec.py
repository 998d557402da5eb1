"""Core types of a finite hidden stochastic game"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from utils.errors import UnknownLabelError

MASS_TOL = 1e-12
SUPPORT_TOL = 1e-12


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability vector over the states, with its support"""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen_array(self.probs))
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ValueError("belief must be a non-empty vector")

    @classmethod
    def dirac(cls, k, n):
        probs = np.zeros(n)
        probs[k] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n):
        return cls(np.full(n, 1.0 / n))

    @property
    def size(self):
        return self.probs.size

    @property
    def support(self):
        return frozenset(int(k) for k in np.flatnonzero(self.probs > SUPPORT_TOL))

    @property
    def mass(self):
        return float(self.probs.sum())

    def is_valid(self, tol=MASS_TOL):
        return bool(np.all(self.probs >= 0.0) and abs(self.mass - 1.0) <= tol)

    def distance(self, other):
        """L1 distance to another belief"""
        return float(np.abs(self.probs - np.asarray(getattr(other, "probs", other))).sum())

    def key(self):
        return tuple(float(p) for p in self.probs)

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Belief({np.array2string(self.probs, precision=6)})"


class Step(NamedTuple):
    """One stage of play: both actions and the signal that followed"""

    i: int
    j: int
    s: int


@dataclass(frozen=True)
class TransitionMatrix:
    """P(i,j,s): entries[k, k'] = p(k', s | k, i, j)"""

    entries: np.ndarray
    tag: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_array(self.entries))

    @property
    def row_sums(self):
        return self.entries.sum(axis=1)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """
    Finite zero-sum hidden stochastic game (K, I, J, S, p, g) with initial belief.

    kernel has shape (K, I, J, K, S) with kernel[k, i, j, k2, s] = p(k2, s | k, i, j);
    reward has shape (K, I, J). Labels are kept in order and tie-breaking anywhere
    in the toolkit follows that index order.
    """

    states: tuple
    actions1: tuple
    actions2: tuple
    signals: tuple
    kernel: np.ndarray
    reward: np.ndarray
    initial_belief: Belief
    name: str = field(default="game", compare=False)

    def __post_init__(self):
        for attr in ("states", "actions1", "actions2", "signals"):
            labels = tuple(str(x) for x in getattr(self, attr))
            if not labels:
                raise ValueError(f"{attr} must not be empty")
            if len(set(labels)) != len(labels):
                raise ValueError(f"{attr} contains duplicate labels")
            object.__setattr__(self, attr, labels)
        object.__setattr__(self, "kernel", _frozen_array(self.kernel))
        object.__setattr__(self, "reward", _frozen_array(self.reward))
        k, i, j, s = self.n_states, self.n_actions1, self.n_actions2, self.n_signals
        if self.kernel.shape != (k, i, j, k, s):
            raise ValueError(f"kernel shape {self.kernel.shape} != {(k, i, j, k, s)}")
        if self.reward.shape != (k, i, j):
            raise ValueError(f"reward shape {self.reward.shape} != {(k, i, j)}")
        if not isinstance(self.initial_belief, Belief):
            object.__setattr__(self, "initial_belief", Belief(self.initial_belief))
        if self.initial_belief.size != k:
            raise ValueError("initial belief length does not match the state count")

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_actions1(self):
        return len(self.actions1)

    @property
    def n_actions2(self):
        return len(self.actions2)

    @property
    def n_signals(self):
        return len(self.signals)

    @property
    def is_blind(self):
        return self.n_signals == 1

    @cached_property
    def matrices(self):
        """All P(i,j,s) stacked with shape (I, J, S, K, K)"""
        arr = np.ascontiguousarray(np.transpose(self.kernel, (1, 2, 4, 0, 3)))
        arr.setflags(write=False)
        return arr

    @cached_property
    def alphabet(self):
        """Index triples (i, j, s) in lexicographic order"""
        return [
            Step(i, j, s)
            for i in range(self.n_actions1)
            for j in range(self.n_actions2)
            for s in range(self.n_signals)
        ]

    def _index(self, labels, value, kind):
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            if 0 <= value < len(labels):
                return int(value)
            raise UnknownLabelError(f"{kind} index {value} out of range")
        try:
            return labels.index(str(value))
        except ValueError:
            raise UnknownLabelError(f"unknown {kind} label {value!r}")

    def state_index(self, label):
        return self._index(self.states, label, "state")

    def action1_index(self, label):
        return self._index(self.actions1, label, "action1")

    def action2_index(self, label):
        return self._index(self.actions2, label, "action2")

    def signal_index(self, label):
        return self._index(self.signals, label, "signal")

    def step(self, i, j, s):
        """Build a Step from labels or indices"""
        return Step(self.action1_index(i), self.action2_index(j), self.signal_index(s))

    def history(self, steps):
        return tuple(self.step(*st) for st in steps)

    def belief(self, mapping):
        """Belief from a {state label: prob} mapping"""
        probs = np.zeros(self.n_states)
        for label, p in mapping.items():
            probs[self.state_index(label)] = p
        return Belief(probs)

    def with_initial_belief(self, belief):
        return GameSpec(
            self.states, self.actions1, self.actions2, self.signals,
            self.kernel, self.reward, belief, name=self.name,
        )

    def with_reward(self, reward):
        return GameSpec(
            self.states, self.actions1, self.actions2, self.signals,
            self.kernel, reward, self.initial_belief, name=self.name,
        )

    def structurally_equal(self, other):
        return (
            self.states == other.states
            and self.actions1 == other.actions1
            and self.actions2 == other.actions2
            and self.signals == other.signals
            and np.array_equal(self.kernel, other.kernel)
            and np.array_equal(self.reward, other.reward)
            and np.array_equal(self.initial_belief.probs, other.initial_belief.probs)
        )


def transition_matrix(spec, i, j, s):
    """
    P(i,j,s) for the given action and signal labels (or indices)
    Args:
        spec: GameSpec
        i, j: Player 1 / Player 2 action
        s: Signal
    Returns:
        TransitionMatrix tagged with the index triple
    """
    step = spec.step(i, j, s)
    return TransitionMatrix(spec.matrices[step.i, step.j, step.s], tag=tuple(step))
