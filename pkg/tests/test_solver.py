"""Tests for matrix games and Shapley iteration on finite stochastic games"""
import numpy as np
import pytest
from scipy import sparse

from games.fixtures import deterministic_cycle_game, matching_pennies_game, recurrent_chain_game
from solver.matrix_game import MatrixGame, batch_values, matrix_game_value
from solver.shapley import (
    REFINEMENT_BUDGET,
    discounted_value,
    shapley_nstage,
    shapley_operator,
    uniform_value_estimate,
)
from solver.stochastic_game import StochasticGame, ValueFunction
from utils.errors import NoConvergence, NumericalFailure


def constant_stochastic_game(c, n_states=3):
    """Uniform random walk with constant reward c"""
    transition = np.full((n_states * 4, n_states), 1.0 / n_states)
    return StochasticGame(np.full((n_states, 2, 2), c), sparse.csr_matrix(transition))


def cycle_game(period):
    """Deterministic cycle paying 1 on the first state only"""
    reward = np.zeros((period, 1, 1))
    reward[0] = 1.0
    transition = np.roll(np.eye(period), 1, axis=1)
    return StochasticGame(reward, sparse.csr_matrix(transition))


def random_stochastic_game(rng, n_states=3, n_i=2, n_j=2):
    reward = rng.random((n_states, n_i, n_j))
    transition = rng.dirichlet(np.ones(n_states), size=n_states * n_i * n_j)
    return StochasticGame(reward, sparse.csr_matrix(transition))


def absorbing_split_game():
    """Start state pays 0.5 and moves 50/50 to an absorbing 1 or an absorbing 0"""
    reward = np.array([0.5, 1.0, 0.0]).reshape(3, 1, 1)
    transition = np.array([[0.0, 0.5, 0.5], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return StochasticGame(reward, sparse.csr_matrix(transition))


class TestMatrixGame:
    def test_examples(self):
        single = matrix_game_value([[0.7]])
        assert single.value == pytest.approx(0.7)
        np.testing.assert_array_equal(single.row, [1.0])
        pennies = matrix_game_value(np.eye(2))
        assert pennies.value == pytest.approx(0.5)
        np.testing.assert_allclose(pennies.row, [0.5, 0.5])
        np.testing.assert_allclose(pennies.col, [0.5, 0.5])
        saddle = matrix_game_value(MatrixGame([[0.4, 0.2], [0.6, 0.5]]))
        assert saddle.value == pytest.approx(0.5)
        np.testing.assert_array_equal(saddle.row, [0.0, 1.0])
        np.testing.assert_array_equal(saddle.col, [0.0, 1.0])

    def test_rejects_bad_payoffs(self):
        with pytest.raises(ValueError):
            MatrixGame([[np.nan, 1.0]])

    def test_mixtures_guarantee_the_value(self, rng):
        for _ in range(200):
            shape = tuple(int(x) for x in rng.integers(1, 5, size=2))
            payoff = rng.random(shape)
            sol = matrix_game_value(payoff)
            assert (sol.row @ payoff).min() >= sol.value - 1e-9
            assert (payoff @ sol.col).max() <= sol.value + 1e-9
            assert sol.row.sum() == pytest.approx(1.0) and sol.col.sum() == pytest.approx(1.0)

    def test_value_lies_between_pure_maxmin_and_minmax(self, rng):
        for _ in range(200):
            payoff = rng.random(tuple(int(x) for x in rng.integers(1, 5, size=2)))
            value = matrix_game_value(payoff).value
            assert payoff.min(axis=1).max() - 1e-9 <= value <= payoff.max(axis=0).min() + 1e-9

    @pytest.mark.parametrize("shape", [(2, 2), (3, 3), (2, 4)])
    def test_batch_matches_single_solves(self, rng, shape):
        payoffs = rng.random((50,) + shape)
        expected = [matrix_game_value(p).value for p in payoffs]
        np.testing.assert_allclose(batch_values(payoffs), expected, atol=1e-9)


class TestShapley:
    def test_constant_reward(self):
        game = constant_stochastic_game(0.3)
        for n in (1, 5, 20):
            np.testing.assert_allclose(shapley_nstage(game, n).values, 0.3)
        np.testing.assert_allclose(discounted_value(game, 0.1).values, 0.3, atol=1e-7)

    def test_matching_pennies(self):
        game = matching_pennies_game().to_stochastic_game()
        assert shapley_nstage(game, 7).at(0) == pytest.approx(0.5)

    def test_operator_discounted_form(self):
        game = absorbing_split_game()
        w = np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(shapley_operator(game, w, discount=0.5), [0.5, 1.0, 0.0])
        np.testing.assert_allclose(shapley_operator(game, w), [1.0, 2.0, 0.0])

    @pytest.mark.parametrize("discount", [None, 0.3])
    def test_operator_is_monotone_and_non_expansive(self, rng, discount):
        factor = 1.0 if discount is None else 1.0 - discount
        for _ in range(50):
            game = random_stochastic_game(rng)
            w = rng.random(game.n_states) * 3.0
            w_up = w + rng.random(game.n_states)
            low, high = shapley_operator(game, w, discount), shapley_operator(game, w_up, discount)
            assert np.all(high >= low - 1e-9)
            w_other = rng.random(game.n_states) * 3.0
            moved = np.abs(shapley_operator(game, w_other, discount) - low).max()
            assert moved <= factor * np.abs(w_other - w).max() + 1e-9

    def test_absorbing_split(self):
        game = absorbing_split_game()
        for lam in (0.05, 0.3, 0.9):
            assert discounted_value(game, lam, tol=1e-12).at(0) == pytest.approx(0.5, abs=1e-9)

    def test_discount_range(self):
        with pytest.raises(ValueError):
            discounted_value(absorbing_split_game(), 1.0)
        with pytest.raises(ValueError):
            shapley_nstage(absorbing_split_game(), 0)

    def test_value_function_labels(self):
        game = recurrent_chain_game().to_stochastic_game()
        assert set(shapley_nstage(game, 3).to_dict()) == {"low", "high"}


class TestUniformValue:
    def test_constant_reward(self):
        value, diagnostics = uniform_value_estimate(constant_stochastic_game(0.42))
        assert value == pytest.approx(0.42, abs=1e-6)
        assert diagnostics.converged
        assert diagnostics.horizons[0] == 16

    def test_matching_pennies(self):
        value, _ = uniform_value_estimate(matching_pennies_game().to_stochastic_game())
        assert value == pytest.approx(0.5, abs=1e-6)

    def test_recurrent_chain(self):
        # stationary mass on the rewarding state is p / (p + q)
        value, diagnostics = uniform_value_estimate(recurrent_chain_game(0.3, 0.6).to_stochastic_game())
        assert value == pytest.approx(1.0 / 3.0, abs=1e-5)
        assert len(diagnostics.nstage_extrapolated) == len(diagnostics.horizons) - 1

    def test_periodic_chain(self):
        value, _ = uniform_value_estimate(deterministic_cycle_game().to_stochastic_game())
        assert value == pytest.approx(0.5, abs=1e-5)

    def test_no_convergence_carries_diagnostics(self):
        game = recurrent_chain_game(0.3, 0.6).to_stochastic_game()
        with pytest.raises(NoConvergence) as excinfo:
            uniform_value_estimate(game, tol=1e-6, budget=2)
        diagnostics = excinfo.value.diagnostics
        assert not diagnostics.converged
        assert len(diagnostics.rows()) == 4
        assert diagnostics.to_dict()["tol"] == 1e-6

    def test_period_three_cycle_converges_at_loose_tolerance(self):
        # v_n oscillates around 1/3 with amplitude 1/(3n)
        value, diagnostics = uniform_value_estimate(cycle_game(3), tol=1e-3)
        assert value == pytest.approx(1.0 / 3.0, abs=1e-3)
        assert diagnostics.converged

    def test_period_three_cycle_reports_no_convergence(self):
        with pytest.raises(NoConvergence) as excinfo:
            uniform_value_estimate(cycle_game(3), tol=1e-6, budget=5)
        diagnostics = excinfo.value.diagnostics
        assert len(diagnostics.horizons) == 5
        assert all(t >= 64 * np.finfo(float).eps for t in diagnostics.discount_tols)

    def test_inner_solver_failure_becomes_no_convergence(self, monkeypatch):
        def failing(*args, **kwargs):
            raise NumericalFailure("residual out of reach")

        monkeypatch.setattr("solver.shapley.discounted_value", failing)
        with pytest.raises(NoConvergence) as excinfo:
            uniform_value_estimate(cycle_game(3))
        assert excinfo.value.diagnostics is not None
        assert "residual out of reach" in str(excinfo.value)

    def test_default_budget_stops_at_the_twelfth_horizon(self, monkeypatch):
        def stalled(game, lam, tol=1e-9, start=None, max_iter=None):
            return ValueFunction(np.zeros(game.n_states), "stalled")

        monkeypatch.setattr("solver.shapley.discounted_value", stalled)
        with pytest.raises(NoConvergence) as excinfo:
            uniform_value_estimate(cycle_game(3))
        diagnostics = excinfo.value.diagnostics
        assert len(diagnostics.horizons) == REFINEMENT_BUDGET == 12
        assert diagnostics.horizons[-1] == 16 * 2 ** 11
