"""Belief dynamics of a hidden stochastic game"""
import logging
from dataclasses import dataclass

import numpy as np

from games.spec import Belief, Step
from utils.errors import CapExceeded, InadmissibleHistory, ZeroProbabilitySignal

logger = logging.getLogger(__name__)

ADMISSIBLE_TOL = 1e-15
DEDUP_TOL = 1e-12

# ========== TYPES ==========
History = tuple  # tuple[Step, ...]; the empty tuple is the history before stage 1


@dataclass(frozen=True)
class BeliefNode:
    """A belief reached by a history, weighted by its probability under uniform play"""

    history: tuple
    belief: Belief
    weight: float

    @property
    def depth(self):
        """Stage index: the history before stage m has m-1 steps"""
        return len(self.history) + 1


def _probs(b):
    return b.probs if isinstance(b, Belief) else np.asarray(b, dtype=float)


# ========== SINGLE STEP ==========
def signal_distribution(spec, b, i, j):
    """Vector over signals: P(s | b, i, j)"""
    # sum over k, k' of b(k) P(i,j,s)[k,k']
    return np.einsum("k,skl->s", _probs(b), spec.matrices[i, j])


def signal_probability(spec, b, i, j, s):
    """bᵀ P(i,j,s) 1"""
    return float(_probs(b) @ spec.matrices[i, j, s].sum(axis=1))


def belief_update(spec, b, i, j, s):
    """
    Posterior after playing (i, j) and observing s
    Args:
        spec: GameSpec
        b: current Belief
        i, j, s: action and signal indices
    Returns:
        Belief proportional to bᵀ P(i,j,s)
    Raises:
        ZeroProbabilitySignal when the signal is not admissible
    """
    unnormalized = _probs(b) @ spec.matrices[i, j, s]
    total = float(unnormalized.sum())
    if total <= ADMISSIBLE_TOL:
        raise ZeroProbabilitySignal(
            f"signal {spec.signals[s]!r} has probability {total:.3g} after "
            f"({spec.actions1[i]}, {spec.actions2[j]})"
        )
    return Belief(unnormalized / total)


def stage_reward(spec, b, i=None, j=None):
    """ḡ(b, i, j); the full |I|x|J| table when the actions are omitted"""
    table = np.tensordot(_probs(b), spec.reward, axes=1)
    if i is None:
        return table
    return float(table[i, j])


# ========== HISTORIES ==========
def forward_product(spec, h):
    """T(h) = P(i_1,j_1,s_2) ... P(i_m-1,j_m-1,s_m); identity for the empty history"""
    product = np.eye(spec.n_states)
    for step in h:
        product = product @ spec.matrices[step[0], step[1], step[2]]
    return product


def history_normalizer(spec, b1, h):
    """b1ᵀ T(h) 1, the probability of the signal sequence given the actions"""
    return float(_probs(b1) @ forward_product(spec, h).sum(axis=1))


def is_admissible(spec, b1, h):
    return history_normalizer(spec, b1, h) > ADMISSIBLE_TOL


def belief_from_history(spec, b1, h):
    """
    Belief after history h from b1, via the forward product
    Raises:
        InadmissibleHistory when b1ᵀ T(h) 1 <= 1e-15
    """
    row = _probs(b1) @ forward_product(spec, h)
    total = float(row.sum())
    if total <= ADMISSIBLE_TOL:
        raise InadmissibleHistory(f"history of length {len(h)} has probability {total:.3g}")
    return Belief(row / total)


def enumerate_admissible(spec, b1, m, cap):
    """
    All admissible histories before stage m, with beliefs and uniform-play weights
    Args:
        spec: GameSpec
        b1: initial Belief
        m: stage index (m=1 gives only the empty history)
        cap: maximal number of nodes at any depth
    Returns:
        list of BeliefNode in lexicographic history order
    Raises:
        CapExceeded
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    b1 = b1 if isinstance(b1, Belief) else Belief(b1)
    uniform = 1.0 / (spec.n_actions1 * spec.n_actions2)
    level = [BeliefNode((), b1, 1.0)]
    for depth in range(1, m):
        nxt = []
        for node in level:
            for i in range(spec.n_actions1):
                for j in range(spec.n_actions2):
                    dist = signal_distribution(spec, node.belief, i, j)
                    for s in np.flatnonzero(dist > ADMISSIBLE_TOL):
                        s = int(s)
                        nxt.append(BeliefNode(
                            node.history + (Step(i, j, s),),
                            belief_update(spec, node.belief, i, j, s),
                            node.weight * uniform * float(dist[s]),
                        ))
                        if len(nxt) > cap:
                            raise CapExceeded("enumerate_admissible", len(nxt), cap)
        level = nxt
        logger.debug("depth %d: %d admissible histories", depth, len(level))
    return level


def export_trace(nodes, spec=None):
    """JSON-ready rows of (history, belief, weight)"""
    rows = []
    for node in nodes:
        if spec is None:
            history = [list(step) for step in node.history]
        else:
            history = [[spec.actions1[st.i], spec.actions2[st.j], spec.signals[st.s]]
                       for st in node.history]
        rows.append({"history": history, "belief": node.belief.probs.tolist(), "weight": node.weight})
    return rows


def dedup_key(b, tol=DEDUP_TOL):
    """Grid key under which beliefs closer than tol in L-infinity collapse"""
    return tuple(np.round(_probs(b) / tol).astype(np.int64).tolist())
