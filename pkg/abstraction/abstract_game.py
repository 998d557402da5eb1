"""The abstract stochastic game: anchored beliefs replayed exactly for η stages"""
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy import sparse

from abstraction.grid import GridPoint, project
from beliefs.engine import ADMISSIBLE_TOL, belief_from_history, signal_distribution, stage_reward
from games.spec import Belief, Step
from solver.stochastic_game import StochasticGame
from utils.errors import CapExceeded, EtaTooSmall, InadmissibleSignal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AbstractState:
    """
    anchor: GridPoint, or the initial Belief for the first block
    signal: set only right after a re-anchoring (the signal that caused it)
    trail: steps played since the anchor
    """

    anchor: Union[GridPoint, Belief]
    trail: tuple = ()
    signal: Optional[int] = None

    @property
    def anchor_belief(self):
        return self.anchor.belief if isinstance(self.anchor, GridPoint) else self.anchor

    @property
    def stage_in_block(self):
        """1 for the block's first stage, trail length + 1 afterwards"""
        return 1 if self.signal is not None else len(self.trail) + 1

    def belief(self, spec):
        """proj(x)"""
        return belief_from_history(spec, self.anchor_belief, self.trail)

    def label(self, spec=None):
        anchor = self.anchor.label() if isinstance(self.anchor, GridPoint) else "b1"
        if self.signal is not None:
            sig = spec.signals[self.signal] if spec is not None else str(self.signal)
            return f"[{anchor}]!{sig}"
        if spec is None:
            steps = ",".join(f"{st.i}{st.j}{st.s}" for st in self.trail)
        else:
            steps = ",".join(
                f"{spec.actions1[st.i]}.{spec.actions2[st.j]}.{spec.signals[st.s]}" for st in self.trail
            )
        return f"[{anchor}]({steps})"


def initial_state(b1):
    return AbstractState(anchor=b1 if isinstance(b1, Belief) else Belief(b1))


def abstract_update(spec, x, i, j, s, eta, current=None):
    """
    ψ_A(x, i, j, s)
    Args:
        spec: GameSpec
        x: AbstractState
        i, j, s: action and signal indices
        eta: recall
        current: proj(x) when already known
    Returns:
        Next AbstractState: the trail grows inside a block and the belief is
        re-projected onto the grid at the block end
    Raises:
        InadmissibleSignal when s has probability zero from proj(x)
    """
    belief = x.belief(spec) if current is None else current
    dist = signal_distribution(spec, belief, i, j)
    if dist[s] <= ADMISSIBLE_TOL:
        raise InadmissibleSignal(f"signal {spec.signals[s]!r} is not admissible from the abstract state")
    step = Step(i, j, s)
    if x.stage_in_block < eta:
        if x.signal is not None:
            return AbstractState(anchor=x.anchor, trail=(step,))
        return AbstractState(anchor=x.anchor, trail=x.trail + (step,))
    unnormalized = belief.probs @ spec.matrices[i, j, s]
    return AbstractState(anchor=project(Belief(unnormalized / unnormalized.sum()), eta), signal=s)


@dataclass
class AbstractGame:
    """Reachable part of the abstract game Γ_A(b1, η)"""

    spec: object
    eta: int
    states: list
    beliefs: np.ndarray  # (X, K): proj(x)
    transition: sparse.csr_matrix  # (X*I*J, X)
    reward: np.ndarray  # (X, I, J)
    depths: list
    initial: int = 0
    index: dict = field(default_factory=dict)

    @property
    def n_states(self):
        return len(self.states)

    def state_id(self, x):
        return self.index[x]

    @cached_property
    def labels(self):
        return tuple(f"x{n}" for n in range(self.n_states))

    def to_stochastic_game(self):
        return StochasticGame(self.reward, self.transition, self.initial, self.labels)

    def next_states(self, x, i, j):
        """[(x', probability)] for the row (x, i, j)"""
        row = self.transition.getrow((x * self.spec.n_actions1 + i) * self.spec.n_actions2 + j)
        return list(zip(row.indices.tolist(), row.data.tolist()))

    def stats(self):
        return {
            "states": self.n_states,
            "edges": int(self.transition.nnz),
            "eta": self.eta,
            "depth_histogram": dict(sorted(Counter(self.depths).items())),
        }


def build_abstract(spec, b1, eta, cap):
    """
    Breadth-first closure of the abstract game from x1 = (b1, empty trail)
    Args:
        spec: GameSpec
        b1: initial Belief
        eta: recall, at least |K|
        cap: maximal number of abstract states
    Returns:
        AbstractGame with state ids in discovery order
    Raises:
        EtaTooSmall, CapExceeded
    """
    if eta < spec.n_states:
        raise EtaTooSmall(f"eta={eta} is below |K|={spec.n_states}")
    n_i, n_j = spec.n_actions1, spec.n_actions2
    x1 = initial_state(b1)
    states, beliefs, depths = [x1], [x1.belief(spec).probs], [0]
    index = {x1: 0}
    rows, cols, vals = [], [], []
    queue = deque([0])
    while queue:
        x = queue.popleft()
        state, belief = states[x], Belief(beliefs[x])
        for i in range(n_i):
            for j in range(n_j):
                row = (x * n_i + i) * n_j + j
                dist = signal_distribution(spec, belief, i, j)
                for s in np.flatnonzero(dist > ADMISSIBLE_TOL):
                    nxt = abstract_update(spec, state, i, j, int(s), eta, current=belief)
                    target = index.get(nxt)
                    if target is None:
                        target = len(states)
                        if target >= cap:
                            raise CapExceeded("build_abstract", target + 1, cap)
                        index[nxt] = target
                        states.append(nxt)
                        beliefs.append(nxt.belief(spec).probs)
                        depths.append(depths[x] + 1)
                        queue.append(target)
                    rows.append(row)
                    cols.append(target)
                    vals.append(float(dist[s]))
    n = len(states)
    transition = sparse.csr_matrix((vals, (rows, cols)), shape=(n * n_i * n_j, n))
    transition.sum_duplicates()
    belief_matrix = np.array(beliefs)
    reward = np.tensordot(belief_matrix, spec.reward, axes=1)
    logger.info("abstract game eta=%d: %d states, %d edges", eta, n, transition.nnz)
    return AbstractGame(spec, eta, states, belief_matrix, transition, reward, depths, 0, index)


def abstract_to_document(ag):
    """Revealing JSON game document of an abstract game; signals name the successor"""
    spec = ag.spec
    labels = list(ag.labels)
    transitions = []
    coo = ag.transition.tocoo()
    n_i, n_j = spec.n_actions1, spec.n_actions2
    for row, col, prob in zip(coo.row, coo.col, coo.data):
        x, rem = divmod(int(row), n_i * n_j)
        i, j = divmod(rem, n_j)
        transitions.append({
            "from": labels[x], "a1": spec.actions1[i], "a2": spec.actions2[j],
            "to": labels[col], "signal": labels[col], "prob": float(prob),
        })
    rewards = [
        {"state": labels[x], "a1": spec.actions1[i], "a2": spec.actions2[j], "value": float(ag.reward[x, i, j])}
        for x, i, j in np.argwhere(ag.reward != 0.0)
    ]
    return {
        "name": f"{spec.name}-abstract-eta{ag.eta}",
        "states": labels,
        "actions1": list(spec.actions1),
        "actions2": list(spec.actions2),
        "signals": labels,
        "transitions": transitions,
        "rewards": rewards,
        "initial_belief": [{"state": labels[ag.initial], "prob": 1.0}],
    }


def stage_reward_at(spec, x):
    """ḡ_A(x, ·, ·) computed directly from proj(x)"""
    return stage_reward(spec, x.belief(spec))
