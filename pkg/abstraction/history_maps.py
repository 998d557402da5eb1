"""Translating histories between the hidden game and its abstract game"""
from dataclasses import dataclass

import numpy as np

from abstraction.abstract_game import abstract_update, initial_state
from beliefs.engine import ADMISSIBLE_TOL, signal_distribution
from games.spec import Step
from utils.errors import InadmissibleHistory, InadmissibleSignal


@dataclass(frozen=True)
class AbstractHistory:
    """x_1, (i_1, j_1), x_2, ... stored as the state sequence and the action pairs"""

    states: tuple
    actions: tuple = ()

    def __len__(self):
        return len(self.actions)

    def ids(self, ag):
        """State ids in a built AbstractGame"""
        return tuple(ag.state_id(x) for x in self.states)

    def extend(self, i, j, x):
        return AbstractHistory(self.states + (x,), self.actions + ((i, j),))


def map_history_xi(spec, b1, eta, h):
    """
    Abstract history driven by ψ_A along the signals of h
    Raises:
        InadmissibleHistory when h leaves the admissible set from b1
    """
    x = initial_state(b1)
    out = AbstractHistory((x,))
    for m, step in enumerate(h):
        try:
            x = abstract_update(spec, x, step[0], step[1], step[2], eta)
        except InadmissibleSignal:
            raise InadmissibleHistory(f"step {m + 1} of the history is not admissible")
        out = out.extend(step[0], step[1], x)
    return out


def map_history_xiA(spec, b1, eta, h_abstract):
    """
    Recover the hidden-game history whose signals drive the abstract history
    Raises:
        InadmissibleHistory when no admissible signal produces the next abstract state
    """
    if not h_abstract.states or h_abstract.states[0] != initial_state(b1):
        raise InadmissibleHistory("abstract history does not start at x1")
    steps = []
    for m, (i, j) in enumerate(h_abstract.actions):
        x, target = h_abstract.states[m], h_abstract.states[m + 1]
        current = x.belief(spec)
        dist = signal_distribution(spec, current, i, j)
        match = None
        for s in np.flatnonzero(dist > ADMISSIBLE_TOL):
            if abstract_update(spec, x, i, j, int(s), eta, current=current) == target:
                match = int(s)
                break
        if match is None:
            raise InadmissibleHistory(f"abstract step {m + 1} is not produced by any admissible signal")
        steps.append(Step(int(i), int(j), match))
    return tuple(steps)
