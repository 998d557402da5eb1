"""
Lockstep simulation of a hidden game Γ and its abstract game Γ_A

Every block of η stages is cut into sub-blocks of m_eps stages. At each sub-block
start the exact belief b of Γ is compared with proj(x) of Γ_A; the first sub-block
where they are within 2ε is T_ℓ, after which the continuation strategies stay
rooted until the block ends. Actions of both games read the same uniform
variate for the same role, so equal mixtures give equal draws. The signal of Γ
is drawn from its belief marginal; Γ_A reuses that draw only when its own signal
law is the same, and otherwise reads an independent variate.
"""
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from abstraction.abstract_game import abstract_update, initial_state
from beliefs.engine import belief_update, signal_distribution, stage_reward
from coupling.strategies import shift_strategy
from games.spec import Belief, Step
from utils.errors import EtaTooSmall, InadmissibleSignal, InvalidBlockStructure, ZeroProbabilitySignal

logger = logging.getLogger(__name__)

# roles of the shared variates at each stage
ROLE_PLAYER1, ROLE_PLAYER2, ROLE_SIGNAL, ROLE_SIGNAL_ABS = range(4)
# signal laws this close are treated as one law and drawn once
SAME_LAW_TOL = 1e-12


class CouplingReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    game: str
    episodes: int
    horizon: int
    blocks: int
    eta: int
    m_eps: int
    epsilon: float
    sub_blocks: int
    mean_gap: float
    gap_stderr: float
    mean_payoff: float
    payoff_stderr: float
    mean_abstract_payoff: float
    abstract_payoff_stderr: float
    t_ell_histogram: Dict[int, int]
    case2_fraction: List[float]
    seed: int
    trace: List[dict] = Field(default_factory=list, exclude=True)


@dataclass
class _Episode:
    gap: float
    payoff: float
    abstract_payoff: float
    t_ells: list
    trace: list = field(default_factory=list)


def _draw(probs, u):
    """Inverse-CDF sample; zero-probability entries are never returned"""
    cdf = np.cumsum(probs)
    return min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), len(cdf) - 1)


def draw_signals(law, law_abs, u, u_abs):
    """
    Signals of Γ and Γ_A for one stage

    Equal laws give one common draw; otherwise each game reads its own variate.
    """
    s = _draw(law, u)
    if np.abs(law - law_abs).max() <= SAME_LAW_TOL:
        return s, s
    return s, _draw(law_abs, u_abs)


def _advance_abstract(spec, x, xb, i, j, s, eta):
    """(ψ_A(x, i, j, s), its proj) without replaying the trail"""
    nxt = abstract_update(spec, x, i, j, s, eta, current=xb)
    if nxt.signal is not None:
        return nxt, nxt.anchor_belief
    return nxt, belief_update(spec, xb, i, j, s)


def _run_episode(spec, b1, eta, m_eps, eps, sigma_A, tau, blocks, seed, trace, episode):
    horizon = eta * blocks
    sub_blocks = eta // m_eps
    rng = np.random.default_rng([seed, episode])
    u = rng.random((horizon, 4))

    b, h = b1, ()
    x, xb, h_abs = initial_state(b1), b1, ()
    coupled = False
    t_ells, rows = [], []
    gaps = payoff = abstract_payoff = 0.0
    sigma_c = tau_c = None
    shadow_x = shadow_xb = shadow_b = None
    rel_gamma = rel_abs = ()

    for t in range(horizon):
        pos = t % eta
        if pos == 0:
            if t > 0:
                t_ells.append(t_ell)
            coupled, t_ell = False, sub_blocks
        if pos % m_eps == 0 and not coupled:
            if b.distance(xb) <= 2.0 * eps:
                coupled, t_ell = True, pos // m_eps
            sigma_c, tau_c = shift_strategy(sigma_A, h_abs), shift_strategy(tau, h)
            shadow_x, shadow_xb, shadow_b = x, xb, b
            rel_gamma = rel_abs = ()

        # Γ: player 1 follows σ_A on the abstract state its own signals would reach
        if shadow_x is None:
            p1 = sigma_c.mixture(history=rel_gamma)
        else:
            p1 = sigma_c.mixture(history=rel_gamma, belief=shadow_xb, abstract_state=shadow_x)
        p2 = tau.mixture(history=h, belief=b)
        # Γ_A: player 2 follows τ on the hidden history its own signals would reach
        p1_abs = sigma_A.mixture(history=h_abs, belief=xb, abstract_state=x)
        if shadow_b is None:
            p2_abs = tau_c.mixture(history=rel_abs)
        else:
            p2_abs = tau_c.mixture(history=rel_abs, belief=shadow_b)

        i, i_abs = _draw(p1, u[t, ROLE_PLAYER1]), _draw(p1_abs, u[t, ROLE_PLAYER1])
        j, j_abs = _draw(p2, u[t, ROLE_PLAYER2]), _draw(p2_abs, u[t, ROLE_PLAYER2])

        g = stage_reward(spec, b, i, j)
        g_abs = stage_reward(spec, xb, i_abs, j_abs)
        gaps += g - g_abs
        payoff += g
        abstract_payoff += g_abs
        if trace:
            rows.append({
                "episode": episode, "stage": t + 1, "block": t // eta,
                "belief": " ".join(f"{p:.6g}" for p in b.probs),
                "abstract_state": x.label(spec), "gap": g - g_abs, "coupled": coupled,
            })

        s, s_abs = draw_signals(
            signal_distribution(spec, b, i, j), signal_distribution(spec, xb, i_abs, j_abs),
            u[t, ROLE_SIGNAL], u[t, ROLE_SIGNAL_ABS],
        )

        step, step_abs = Step(i, j, s), Step(i_abs, j_abs, s_abs)
        b, h = belief_update(spec, b, i, j, s), h + (step,)
        x, xb = _advance_abstract(spec, x, xb, i_abs, j_abs, s_abs, eta)
        h_abs = h_abs + (step_abs,)

        # off the admissible support the continuation falls back to its default mixture
        if shadow_x is not None:
            try:
                shadow_x, shadow_xb = _advance_abstract(spec, shadow_x, shadow_xb, i, j, s, eta)
            except InadmissibleSignal:
                shadow_x = shadow_xb = None
        if shadow_b is not None:
            try:
                shadow_b = belief_update(spec, shadow_b, i_abs, j_abs, s_abs)
            except ZeroProbabilitySignal:
                shadow_b = None
        rel_gamma, rel_abs = rel_gamma + (step,), rel_abs + (step_abs,)

    t_ells.append(t_ell)
    return _Episode(gaps / horizon, payoff / horizon, abstract_payoff / horizon, t_ells, rows)


def _sem(values):
    if len(values) < 2:
        return 0.0
    return float(stats.sem(values))


def simulate_coupling(spec, b1, eta, m_eps, eps, sigma_A, tau, episodes, blocks, seed,
                      threads=1, trace_episodes=0):
    """
    Estimate the payoff gap between Γ and Γ_A under the block coupling
    Args:
        spec: GameSpec
        b1: initial Belief
        eta: recall of the abstract game, a multiple of m_eps
        m_eps: sub-block length
        eps: precision of the case split
        sigma_A: player 1 strategy of the abstract game
        tau: player 2 strategy of the hidden game
        episodes, blocks: Monte Carlo size; the horizon is blocks * eta
        seed: root seed; episode e reads the stream seeded by (seed, e)
        threads: worker threads over episodes
        trace_episodes: number of leading episodes whose stages are kept as trace rows
    Returns:
        CouplingReport
    Raises:
        InvalidBlockStructure, EtaTooSmall
    """
    if m_eps < 1 or eta % m_eps != 0:
        raise InvalidBlockStructure(f"eta={eta} is not a multiple of m_eps={m_eps}")
    if eta < spec.n_states:
        raise EtaTooSmall(f"eta={eta} is below |K|={spec.n_states}")
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if episodes < 1 or blocks < 1:
        raise ValueError("episodes and blocks must be positive")
    b1 = b1 if isinstance(b1, Belief) else Belief(b1)
    if threads > 1 and any(getattr(st, "fill", None) is not None for st in (sigma_A, tau)):
        logger.warning("lazily drawn strategies need a fixed draw order; running on one thread")
        threads = 1

    run = partial(_run_episode, spec, b1, eta, m_eps, eps, sigma_A, tau, blocks, seed, False)
    traced = partial(_run_episode, spec, b1, eta, m_eps, eps, sigma_A, tau, blocks, seed, True)
    n_traced = min(trace_episodes, episodes)
    results = [traced(e) for e in range(n_traced)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results.extend(pool.map(run, range(n_traced, episodes)))
    else:
        results.extend(run(e) for e in range(n_traced, episodes))

    gaps = np.array([r.gap for r in results])
    payoffs = np.array([r.payoff for r in results])
    abstract_payoffs = np.array([r.abstract_payoff for r in results])
    t_ells = np.array([r.t_ells for r in results])  # (episodes, blocks)
    sub_blocks = eta // m_eps
    histogram = Counter(int(t) for t in t_ells.ravel())
    report = CouplingReport(
        game=spec.name,
        episodes=episodes,
        horizon=eta * blocks,
        blocks=blocks,
        eta=eta,
        m_eps=m_eps,
        epsilon=eps,
        sub_blocks=sub_blocks,
        mean_gap=float(gaps.mean()),
        gap_stderr=_sem(gaps),
        mean_payoff=float(payoffs.mean()),
        payoff_stderr=_sem(payoffs),
        mean_abstract_payoff=float(abstract_payoffs.mean()),
        abstract_payoff_stderr=_sem(abstract_payoffs),
        t_ell_histogram=dict(sorted(histogram.items())),
        case2_fraction=(t_ells.mean(axis=0) / sub_blocks).tolist(),
        seed=seed,
        trace=[row for r in results for row in r.trace],
    )
    logger.info(
        "coupling %s: %d episodes, mean gap %.3g ± %.2g",
        spec.name, episodes, report.mean_gap, report.gap_stderr,
    )
    return report


def stopping_tail(report, omega):
    """Empirical P(T_ℓ > ω) over all blocks, with its binomial standard error"""
    total = sum(report.t_ell_histogram.values())
    above = sum(count for t, count in report.t_ell_histogram.items() if t > omega)
    p = above / total
    return p, math.sqrt(p * (1.0 - p) / total)


def contraction_trace(spec, b, b_other, steps, i, j, s):
    """
    L1 distances between two beliefs pushed through the same step repeatedly
    Returns:
        List of steps + 1 distances, starting with the initial one
    """
    b = b if isinstance(b, Belief) else Belief(b)
    b_other = b_other if isinstance(b_other, Belief) else Belief(b_other)
    distances = [b.distance(b_other)]
    for _ in range(steps):
        b = belief_update(spec, b, i, j, s)
        b_other = belief_update(spec, b_other, i, j, s)
        distances.append(b.distance(b_other))
    return distances


def weak_ergodicity_gap(spec, m, samples, seed):
    """
    Sampled spread of beliefs started at the vertices after m shared random steps
    Returns:
        (max gap, mean gap) over the sampled words, counting only the vertices
        from which the word stays admissible
    """
    rng = np.random.default_rng(seed)
    letters = list(spec.alphabet)
    vertices = [Belief.dirac(k, spec.n_states) for k in range(spec.n_states)]
    gaps = []
    for _ in range(samples):
        word = [letters[n] for n in rng.integers(len(letters), size=m)]
        ends = []
        for v in vertices:
            b = v
            try:
                for step in word:
                    b = belief_update(spec, b, *step)
            except ZeroProbabilitySignal:
                continue
            ends.append(b.probs)
        if len(ends) < 2:
            continue
        ends = np.array(ends)
        gaps.append(float(np.abs(ends[:, None, :] - ends[None, :, :]).sum(axis=-1).max()))
    if not gaps:
        return 0.0, 0.0
    return max(gaps), float(np.mean(gaps))
