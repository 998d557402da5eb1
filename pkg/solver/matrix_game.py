"""Zero-sum matrix games solved as a linear program with Bland's rule simplex"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from utils.errors import NumericalFailure

EPS = 1e-12
MAX_PIVOTS = 10_000


@dataclass(frozen=True)
class MatrixGame:
    """Payoff to the row player, who maximizes"""

    payoff: np.ndarray

    def __post_init__(self):
        payoff = np.atleast_2d(np.asarray(self.payoff, dtype=float))
        if payoff.ndim != 2 or payoff.size == 0:
            raise ValueError("payoff must be a non-empty matrix")
        if not np.all(np.isfinite(payoff)):
            raise ValueError("payoff entries must be finite")
        object.__setattr__(self, "payoff", payoff)


class MatrixGameSolution(NamedTuple):
    value: float
    row: np.ndarray
    col: np.ndarray


def _pure(n, k):
    x = np.zeros(n)
    x[k] = 1.0
    return x


def _saddle(payoff, tol):
    lower = payoff.min(axis=1)
    upper = payoff.max(axis=0)
    i, j = int(lower.argmax()), int(upper.argmin())
    if upper[j] - lower[i] <= tol:
        return MatrixGameSolution(float(lower[i]), _pure(payoff.shape[0], i), _pure(payoff.shape[1], j))
    return None


def _simplex(A):
    """
    maximize 1ᵀw s.t. A w <= 1, w >= 0, starting from the slack basis.

    Returns (w, u, objective) where u are the dual prices of the constraints.
    """
    n, m = A.shape
    basis = np.arange(m, m + n)
    D = np.hstack((A, np.eye(n), np.ones((n, 1))))
    reduced = np.concatenate((np.ones(m), np.zeros(n)))
    objective = 0.0
    for _ in range(MAX_PIVOTS):
        # Bland: lowest-index improving column
        candidates = np.flatnonzero(reduced > EPS)
        if candidates.size == 0:
            break
        col = int(candidates[0])
        rows = np.flatnonzero(D[:, col] > EPS)
        if rows.size == 0:
            raise NumericalFailure("matrix game LP is unbounded")
        ratios = D[rows, -1] / D[rows, col]
        best = ratios.min()
        tied = rows[ratios <= best + EPS]
        row = int(tied[np.argmin(basis[tied])])
        D[row] /= D[row, col]
        for r in range(n):
            if r != row and D[r, col] != 0.0:
                D[r] -= D[r, col] * D[row]
        objective += reduced[col] * D[row, -1]
        reduced = reduced - reduced[col] * D[row, :-1]
        basis[row] = col
    else:
        raise NumericalFailure(f"simplex did not terminate within {MAX_PIVOTS} pivots")
    primal = np.zeros(m + n)
    primal[basis] = D[:, -1]
    return primal[:m], np.maximum(-reduced[m:], 0.0), objective


def matrix_game_value(game, tol=1e-9):
    """
    Value and optimal mixed strategies of a zero-sum matrix game
    Args:
        game: MatrixGame or payoff array (rows maximize)
        tol: Verification tolerance on both guarantees
    Returns:
        MatrixGameSolution(value, row mixture, column mixture)
    Raises:
        NumericalFailure when the LP fails or its solution does not verify
    """
    payoff = game.payoff if isinstance(game, MatrixGame) else MatrixGame(game).payoff
    found = _saddle(payoff, EPS * max(1.0, float(np.abs(payoff).max())))
    if found is not None:
        return found
    shift = 1.0 - payoff.min()
    w, u, objective = _simplex(payoff + shift)
    if objective <= EPS:
        raise NumericalFailure("degenerate LP objective")
    value = 1.0 / objective - shift
    col = w / w.sum()
    row = u / u.sum()
    scale = max(1.0, float(np.abs(payoff).max()))
    if (row @ payoff).min() < value - tol * scale or (payoff @ col).max() > value + tol * scale:
        raise NumericalFailure(f"LP solution fails verification at tol={tol}")
    return MatrixGameSolution(float(value), row, col)


def batch_values(payoffs, tol=1e-9):
    """
    Values of a stack of matrix games with shape (X, I, J)

    Saddle points and 2x2 games are resolved in closed form; the rest go through the LP.
    """
    payoffs = np.asarray(payoffs, dtype=float)
    lower = payoffs.min(axis=2).max(axis=1)
    upper = payoffs.max(axis=1).min(axis=1)
    values = lower.copy()
    open_games = np.flatnonzero(upper - lower > EPS * np.maximum(1.0, np.abs(upper)))
    if open_games.size == 0:
        return values
    if payoffs.shape[1:] == (2, 2):
        a = payoffs[open_games, 0, 0]
        b = payoffs[open_games, 0, 1]
        c = payoffs[open_games, 1, 0]
        d = payoffs[open_games, 1, 1]
        values[open_games] = (a * d - b * c) / (a + d - b - c)
        return values
    for x in open_games:
        values[x] = matrix_game_value(payoffs[x], tol=tol).value
    return values
