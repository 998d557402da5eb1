"""Shapley iteration: n-stage values, discounted values and the uniform-value estimate"""
import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from solver.matrix_game import batch_values
from solver.stochastic_game import ValueFunction
from utils.errors import NoConvergence, NumericalFailure

logger = logging.getLogger(__name__)

START_HORIZON = 16
REFINEMENT_BUDGET = 12
# residual floor of the discounted solves; below it rounding noise dominates
DISCOUNT_TOL_FLOOR = 64 * np.finfo(float).eps


def _as_game(game):
    # AbstractGame and friends expose their array form through to_stochastic_game
    return game.to_stochastic_game() if hasattr(game, "to_stochastic_game") else game


def shapley_operator(game, w, discount=None, tol=1e-9):
    """
    One application of the Shapley operator
    Args:
        game: StochasticGame (or anything with to_stochastic_game)
        w: value vector over states
        discount: None for the undiscounted sum operator, else λ in (0, 1)
    Returns:
        val[g + P w] or val[λ g + (1 - λ) P w] at every state
    """
    game = _as_game(game)
    continuation = game.expected(w)
    if discount is None:
        payoffs = game.reward + continuation
    else:
        payoffs = discount * game.reward + (1.0 - discount) * continuation
    return batch_values(payoffs, tol=tol)


def _nstage_sums(game, n, w=None, done=0, tol=1e-9):
    w = np.zeros(game.n_states) if w is None else w
    for _ in range(n - done):
        w = shapley_operator(game, w, tol=tol)
    return w


def shapley_nstage(game, n, tol=1e-9):
    """v_n at every state: w_0 = 0, w_t+1 = T(w_t), v_n = w_n / n"""
    if n < 1:
        raise ValueError("horizon must be at least 1")
    game = _as_game(game)
    w = _nstage_sums(game, n, tol=tol)
    return ValueFunction(w / n, f"nstage:n={n}", game.labels)


def _discount_iteration_budget(lam, tol):
    return int(math.ceil(math.log(tol / 2.0) / math.log1p(-lam))) + 10


def discounted_value(game, lam, tol=1e-9, start=None, max_iter=None):
    """
    Fixed point of v = val[λ g + (1 - λ) P v] by value iteration
    Args:
        game: StochasticGame
        lam: weight of the current stage, in (0, 1)
        tol: stop once successive iterates differ by at most tol in sup norm
        start: optional warm start
    Raises:
        NumericalFailure when the iteration budget runs out
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    game = _as_game(game)
    v = np.zeros(game.n_states) if start is None else np.array(start, dtype=float)
    budget = max_iter or _discount_iteration_budget(lam, tol)
    for iteration in range(1, budget + 1):
        nxt = shapley_operator(game, v, discount=lam)
        residual = float(np.abs(nxt - v).max()) if v.size else 0.0
        v = nxt
        if residual <= tol:
            logger.debug("discounted λ=%g converged after %d sweeps", lam, iteration)
            return ValueFunction(v, f"discounted:lambda={lam:g}", game.labels)
    raise NumericalFailure(f"discounted iteration λ={lam:g} did not reach residual {tol:g} in {budget} sweeps")


@dataclass
class UniformDiagnostics:
    """Refinement trace of the uniform-value estimate"""

    horizons: list = field(default_factory=list)
    nstage_values: list = field(default_factory=list)
    discounts: list = field(default_factory=list)
    discounted_values: list = field(default_factory=list)
    discount_tols: list = field(default_factory=list)
    nstage_extrapolated: list = field(default_factory=list)
    discounted_extrapolated: list = field(default_factory=list)
    converged: bool = False
    tol: float = 0.0
    note: str = ("agreement of the extrapolated n-stage and discounted estimates "
                 "is a heuristic stopping rule")

    @classmethod
    def from_dict(cls, data):
        """Inverse of to_dict, for reports that carry the plain form"""
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def rows(self):
        """CSV rows: one per estimate"""
        out = []
        for it, (n, vn, lam, vl) in enumerate(zip(
                self.horizons, self.nstage_values, self.discounts, self.discounted_values)):
            out.append({"iteration": it, "kind": "nstage", "parameter": n, "value": vn})
            out.append({"iteration": it, "kind": "discounted", "parameter": lam, "value": vl})
        return out

    def to_dict(self):
        return {
            "horizons": list(self.horizons),
            "nstage_values": [float(v) for v in self.nstage_values],
            "discounts": list(self.discounts),
            "discounted_values": [float(v) for v in self.discounted_values],
            "discount_tols": list(self.discount_tols),
            "nstage_extrapolated": [float(v) for v in self.nstage_extrapolated],
            "discounted_extrapolated": [float(v) for v in self.discounted_extrapolated],
            "converged": self.converged,
            "tol": self.tol,
            "note": self.note,
        }


def uniform_value_estimate(game, tol=1e-6, start=START_HORIZON, budget=REFINEMENT_BUDGET):
    """
    Estimate the uniform value at the initial state

    v_n and v_λ both drift like v + c/n (resp. v + cλ); each refinement doubles n
    and halves λ, and 2·v_2n - v_n, 2·v_λ/2 - v_λ cancel that first-order term.

    Args:
        game: StochasticGame or AbstractGame
        tol: required agreement between the extrapolated n-stage and discounted estimates
        start: first horizon; the first discount is 1/start
        budget: number of refinements
    Returns:
        (midpoint estimate, UniformDiagnostics)
    Raises:
        NoConvergence with the diagnostics attached
    """
    game = _as_game(game)
    diagnostics = UniformDiagnostics(tol=tol)
    x1 = game.initial
    n, lam = start, 1.0 / start
    w, done = None, 0
    v_lam = None
    previous = None
    agreeing = 0
    for refinement in range(budget):
        w = _nstage_sums(game, n, w, done)
        done = n
        # solve error at most tol/4 unless the floor applies
        residual = max(0.25 * tol * lam, DISCOUNT_TOL_FLOOR)
        try:
            v_lam = discounted_value(game, lam, tol=residual, start=v_lam).values
        except NumericalFailure as e:
            raise NoConvergence(f"refinement {refinement}: {e}", diagnostics) from e
        diagnostics.discount_tols.append(residual)
        vn, vl = float(w[x1] / n), float(v_lam[x1])
        diagnostics.horizons.append(n)
        diagnostics.nstage_values.append(vn)
        diagnostics.discounts.append(lam)
        diagnostics.discounted_values.append(vl)
        logger.info("refinement %d: n=%d v_n=%.9f  λ=%g v_λ=%.9f", refinement, n, vn, lam, vl)
        if previous is not None:
            en, el = 2.0 * vn - previous[0], 2.0 * vl - previous[1]
            diagnostics.nstage_extrapolated.append(en)
            diagnostics.discounted_extrapolated.append(el)
            agreeing = agreeing + 1 if abs(en - el) <= tol else 0
            if agreeing >= 2:
                diagnostics.converged = True
                return 0.5 * (en + el), diagnostics
        previous = (vn, vl)
        n, lam = 2 * n, lam / 2.0
    raise NoConvergence(f"n-stage and discounted estimates did not agree within {tol:g} "
                        f"after {budget} refinements", diagnostics)
