"""Exact n-stage values and payoffs by exhaustive belief-tree recursion"""
import logging

import numpy as np

from beliefs.engine import (
    ADMISSIBLE_TOL,
    belief_update,
    dedup_key,
    signal_distribution,
    stage_reward,
)
from games.spec import Belief, Step
from solver.matrix_game import matrix_game_value
from utils.errors import CapExceeded

logger = logging.getLogger(__name__)


def exact_nstage_value(spec, b1, n, cap=1_000_000, tol=1e-12):
    """
    v̄_n(b1) by backward induction on the belief tree
    Args:
        spec: GameSpec
        b1: initial Belief
        n: horizon
        cap: maximal number of distinct (belief, remaining stages) nodes
    Returns:
        Average value over n stages, in [0, 1]
    """
    if n < 1:
        raise ValueError("horizon must be at least 1")
    b1 = b1 if isinstance(b1, Belief) else Belief(b1)
    memo = {}

    def total_value(b, t):
        # w_t(b): value of the t-stage sum game
        if t == 0:
            return 0.0
        key = (dedup_key(b), t)
        if key in memo:
            return memo[key]
        if len(memo) >= cap:
            raise CapExceeded("exact_nstage_value", len(memo) + 1, cap)
        payoff = stage_reward(spec, b).copy()
        if t > 1:
            for i in range(spec.n_actions1):
                for j in range(spec.n_actions2):
                    dist = signal_distribution(spec, b, i, j)
                    for s in np.flatnonzero(dist > ADMISSIBLE_TOL):
                        nxt = belief_update(spec, b, i, j, int(s))
                        payoff[i, j] += float(dist[s]) * total_value(nxt, t - 1)
        value = matrix_game_value(payoff, tol=tol).value
        memo[key] = value
        return value

    value = total_value(b1, n) / n
    logger.debug("exact n-stage value n=%d: %.12f over %d nodes", n, value, len(memo))
    return value


def exact_payoff(spec, b1, sigma, tau, n, cap=1_000_000):
    """
    γ_n(b1, σ, τ): expected average reward by forward recursion over weighted nodes
    Args:
        spec: GameSpec
        b1: initial Belief
        sigma, tau: strategies exposing mixture(history=..., belief=...)
        n: horizon
        cap: maximal number of live nodes at one stage
    Returns:
        Expected average of the first n stage rewards
    """
    if n < 1:
        raise ValueError("horizon must be at least 1")
    b1 = b1 if isinstance(b1, Belief) else Belief(b1)
    level = [((), b1, 1.0)]
    total = 0.0
    for stage in range(n):
        nxt = []
        for history, b, weight in level:
            x = sigma.mixture(history=history, belief=b)
            y = tau.mixture(history=history, belief=b)
            total += weight * float(x @ stage_reward(spec, b) @ y)
            if stage == n - 1:
                continue
            for i in np.flatnonzero(x > 0.0):
                for j in np.flatnonzero(y > 0.0):
                    i, j = int(i), int(j)
                    dist = signal_distribution(spec, b, i, j)
                    for s in np.flatnonzero(dist > ADMISSIBLE_TOL):
                        s = int(s)
                        nxt.append((
                            history + (Step(i, j, s),),
                            belief_update(spec, b, i, j, s),
                            weight * float(x[i] * y[j] * dist[s]),
                        ))
            if len(nxt) > cap:
                raise CapExceeded("exact_payoff", len(nxt), cap)
        level = nxt
    return total / n
