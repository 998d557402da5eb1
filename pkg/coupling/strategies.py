"""Behavior strategies used by the simulators and the exact payoff oracle"""
import numpy as np

from games.spec import Belief

MIXTURE_TOL = 1e-12


def _normalize(weights, n_actions):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n_actions,):
        raise ValueError(f"mixture must have {n_actions} entries, got shape {weights.shape}")
    if np.any(weights < 0.0) or weights.sum() <= 0.0:
        raise ValueError("mixture weights must be non-negative with a positive total")
    out = weights / weights.sum()
    out.setflags(write=False)
    return out


class UniformStrategy:
    kind = "uniform"

    def __init__(self, n_actions):
        if n_actions < 1:
            raise ValueError("a player needs at least one action")
        self.n_actions = n_actions
        self._mix = _normalize(np.ones(n_actions), n_actions)

    def mixture(self, history=(), belief=None, abstract_state=None):
        return self._mix

    def __repr__(self):
        return f"UniformStrategy({self.n_actions})"


class HistoryTableStrategy:
    """
    Mixture per history, looked up below a root prefix.

    Histories missing from the table play uniformly, unless a fill generator is
    given, in which case a random mixture is drawn once and remembered.
    """

    kind = "table-on-history"

    def __init__(self, table, n_actions, root=(), fill=None):
        self.n_actions = n_actions
        self.root = tuple(root)
        self.fill = fill
        self._table = {tuple(h): _normalize(w, n_actions) for h, w in table.items()}
        self._uniform = _normalize(np.ones(n_actions), n_actions)

    def mixture(self, history=(), belief=None, abstract_state=None):
        key = self.root + tuple(history)
        found = self._table.get(key)
        if found is not None:
            return found
        if self.fill is None:
            return self._uniform
        drawn = _normalize(self.fill.dirichlet(np.ones(self.n_actions)), self.n_actions)
        self._table[key] = drawn
        return drawn

    def shift(self, h):
        """Continuation after h; shares the underlying table"""
        shifted = HistoryTableStrategy({}, self.n_actions, self.root + tuple(h), self.fill)
        shifted._table = self._table
        return shifted

    def as_table(self):
        """Entries reachable from the root, keyed relative to it"""
        depth = len(self.root)
        return {h[depth:]: w for h, w in self._table.items() if h[:depth] == self.root}

    def __repr__(self):
        return f"HistoryTableStrategy(entries={len(self._table)}, root_depth={len(self.root)})"


class AbstractStateStrategy:
    """Stationary strategy of the abstract game, keyed by AbstractState"""

    kind = "table-on-abstract-state"

    def __init__(self, table, n_actions):
        self.n_actions = n_actions
        self._table = {x: _normalize(w, n_actions) for x, w in table.items()}
        self._uniform = _normalize(np.ones(n_actions), n_actions)

    def mixture(self, history=(), belief=None, abstract_state=None):
        if abstract_state is None:
            return self._uniform
        return self._table.get(abstract_state, self._uniform)


class BeliefStationaryStrategy:
    """Mixture as a function of the current belief only"""

    kind = "belief-stationary"

    def __init__(self, rule, n_actions):
        self.rule = rule
        self.n_actions = n_actions
        self._uniform = _normalize(np.ones(n_actions), n_actions)

    def mixture(self, history=(), belief=None, abstract_state=None):
        if belief is None:
            return self._uniform
        if not isinstance(belief, Belief):
            belief = Belief(belief)
        return _normalize(self.rule(belief), self.n_actions)


def shift_strategy(sigma, h):
    """
    σ[h]: the continuation of sigma once h has been played
    Args:
        sigma: any strategy
        h: history prefix
    Returns:
        Re-rooted table strategy; stationary rules come back unchanged
    """
    if not h or not hasattr(sigma, "shift"):
        return sigma
    return sigma.shift(h)


def random_table_strategy(rng, n_actions, histories):
    """HistoryTableStrategy with Dirichlet(1) mixtures on the given histories"""
    return HistoryTableStrategy(
        {tuple(h): rng.dirichlet(np.ones(n_actions)) for h in histories}, n_actions,
    )
