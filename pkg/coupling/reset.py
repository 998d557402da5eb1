"""Empirical witness for the probability of a Doeblin reset"""
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict

from beliefs.engine import belief_update
from coupling.strategies import HistoryTableStrategy
from games.spec import Belief, Step

logger = logging.getLogger(__name__)

CENTER_CHUNK = 256


class ResetReport(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    game: str
    m_eps: int
    epsilon: float
    strategy_pairs: int
    runs: int
    witness: float
    stderr: float
    per_pair: list
    seed: int


def _terminal_beliefs(spec, k0, sigma, tau, m, runs, rng):
    """Beliefs after m stages from the vertex δ_k0, one row per run"""
    out = np.empty((runs, spec.n_states))
    start = Belief.dirac(k0, spec.n_states)
    for r in range(runs):
        k, b, h = k0, start, ()
        for _ in range(m):
            x = sigma.mixture(history=h, belief=b)
            y = tau.mixture(history=h, belief=b)
            i = int(rng.choice(spec.n_actions1, p=x))
            j = int(rng.choice(spec.n_actions2, p=y))
            joint = spec.kernel[k, i, j]
            flat = int(rng.choice(joint.size, p=joint.ravel() / joint.sum()))
            k, s = divmod(flat, spec.n_signals)
            b = belief_update(spec, b, i, j, s)
            h = h + (Step(i, j, s),)
        out[r] = b.probs
    return out


def best_common_cluster(terminals, eps, chunk=CENTER_CHUNK):
    """
    max over candidate centers of the min over vertices of the fraction within eps
    Args:
        terminals: array (K, runs, K) of terminal beliefs per starting vertex
        chunk: centers compared per pass; memory is chunk·K·runs·K floats
    """
    centers = terminals.reshape(-1, terminals.shape[-1])
    best = 0.0
    for start in range(0, len(centers), chunk):
        block = centers[start:start + chunk]
        dist = np.abs(block[:, None, None, :] - terminals[None, :, :, :]).sum(axis=-1)
        fractions = (dist <= eps).mean(axis=2)  # (chunk, K)
        best = max(best, float(fractions.min(axis=1).max()))
    return best


def doeblin_reset_probability(spec, m_eps, eps, strategy_pairs, seed, runs=200):
    """
    Min over sampled strategy pairs of the best common reset frequency
    Args:
        spec: GameSpec
        m_eps: number of stages before the reset is checked
        eps: cluster radius
        strategy_pairs: number of random behavior-strategy pairs
        seed: root seed
        runs: simulated histories per pair and starting vertex
    Returns:
        ResetReport whose witness is an empirical lower bound for delta_eps
    """
    if m_eps < 1 or strategy_pairs < 1 or runs < 1:
        raise ValueError("m_eps, strategy_pairs and runs must be positive")
    rng = np.random.default_rng(seed)
    per_pair = []
    for _ in range(strategy_pairs):
        sigma = HistoryTableStrategy({}, spec.n_actions1, fill=rng)
        tau = HistoryTableStrategy({}, spec.n_actions2, fill=rng)
        terminals = np.stack([
            _terminal_beliefs(spec, k, sigma, tau, m_eps, runs, rng) for k in range(spec.n_states)
        ])
        per_pair.append(best_common_cluster(terminals, eps))
    witness = min(per_pair)
    stderr = math.sqrt(witness * (1.0 - witness) / runs)
    logger.info("reset witness for %s at m=%d: %.4f ± %.4f", spec.name, m_eps, witness, stderr)
    return ResetReport(
        game=spec.name, m_eps=m_eps, epsilon=eps, strategy_pairs=strategy_pairs,
        runs=runs, witness=witness, stderr=stderr, per_pair=per_pair, seed=seed,
    )
