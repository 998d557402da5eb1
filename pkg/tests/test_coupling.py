"""Tests for strategies, the block coupling and the reset witnesses"""
import logging

import numpy as np
import pytest

from abstraction.abstract_game import build_abstract
from beliefs.oracles import exact_payoff
from coupling.reset import best_common_cluster, doeblin_reset_probability
from coupling.simulator import (
    contraction_trace,
    draw_signals,
    simulate_coupling,
    stopping_tail,
    weak_ergodicity_gap,
)
from coupling.strategies import (
    AbstractStateStrategy,
    BeliefStationaryStrategy,
    HistoryTableStrategy,
    UniformStrategy,
    random_table_strategy,
    shift_strategy,
)
from games.fixtures import zero_block_belief
from games.spec import Belief, Step
from pipeline.parameters import compute_parameters
from structure.certificates import primitive_certificate
from structure.coefficients import ergodicity_coefficient
from utils.errors import EtaTooSmall, InvalidBlockStructure

UNIFORM2 = UniformStrategy(2)


@pytest.fixture
def blind_certificate(blind_primitive):
    return primitive_certificate(blind_primitive, 0.2, cap=100_000, strict=True)


def run_blind(spec, certificate, episodes, sigma_A=None, tau=None, **kwargs):
    m = certificate.m_eps
    sigma_A = sigma_A or UniformStrategy(spec.n_actions1)
    tau = tau or UniformStrategy(spec.n_actions2)
    return simulate_coupling(
        spec, spec.initial_belief, 2 * m, m, certificate.epsilon, sigma_A, tau,
        episodes=episodes, blocks=2, seed=11, **kwargs,
    )


def abstract_payoff(ag, sigma_A, n):
    """Expected average reward of Γ_A over n stages, σ_A stationary and player 2 uniform"""
    n_j = ag.spec.n_actions2
    pi = np.array([sigma_A.mixture(abstract_state=x) for x in ag.states])  # (X, I)
    occupancy = np.zeros(ag.n_states)
    occupancy[ag.initial] = 1.0
    total = 0.0
    for _ in range(n):
        weights = occupancy[:, None, None] * pi[:, :, None] * np.full(n_j, 1.0 / n_j)
        total += float((weights * ag.reward).sum())
        occupancy = ag.transition.T @ weights.ravel()
    return total / n


class TestStrategies:
    def test_shift_of_empty_history_is_identity(self, rng):
        sigma = random_table_strategy(rng, 2, [()])
        assert shift_strategy(sigma, ()) is sigma
        assert shift_strategy(UNIFORM2, (Step(0, 0, 0),)) is UNIFORM2

    def test_shift_reads_the_subtable(self):
        h = (Step(1, 0, 0),)
        table = {(): [1.0, 0.0], h: [0.25, 0.75], h + (Step(0, 1, 1),): [0.0, 1.0]}
        shifted = shift_strategy(HistoryTableStrategy(table, 2), h)
        np.testing.assert_allclose(shifted.mixture(()), [0.25, 0.75])
        np.testing.assert_allclose(shifted.mixture((Step(0, 1, 1),)), [0.0, 1.0])
        assert set(shifted.as_table()) == {(), (Step(0, 1, 1),)}

    def test_mixtures_are_distributions(self, rng):
        filled = HistoryTableStrategy({}, 3, fill=rng)
        rule = BeliefStationaryStrategy(lambda b: b.probs + 0.1, 2)
        for mixture in (filled.mixture(()), filled.mixture((Step(0, 0, 0),)), rule.mixture(belief=Belief([0.2, 0.8]))):
            assert mixture.sum() == pytest.approx(1.0)
            assert np.all(mixture >= 0.0)
        # drawn once, then remembered
        assert filled.mixture(()) is filled.mixture(())

    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            HistoryTableStrategy({(): [0.5, 0.5, 0.0]}, 2)
        with pytest.raises(ValueError):
            HistoryTableStrategy({(): [-1.0, 2.0]}, 2)


class TestCoupling:
    def test_revealing_game_couples_exactly(self, revealing_chain):
        report = simulate_coupling(
            revealing_chain, revealing_chain.initial_belief, 2, 1, 0.1,
            UniformStrategy(1), UniformStrategy(1), episodes=200, blocks=3, seed=5,
        )
        assert report.mean_gap == 0.0
        assert report.mean_payoff == report.mean_abstract_payoff
        assert report.t_ell_histogram == {0: 600}

    def test_one_state_game(self, constant_game):
        spec = constant_game(0.7, n_actions1=2, n_actions2=2)
        report = simulate_coupling(spec, spec.initial_belief, 1, 1, 0.1, UNIFORM2, UNIFORM2, 50, 4, seed=0)
        assert report.mean_gap == 0.0
        assert report.mean_payoff == pytest.approx(0.7)

    def test_block_structure_is_checked(self, blind_primitive):
        b1 = blind_primitive.initial_belief
        with pytest.raises(InvalidBlockStructure):
            simulate_coupling(blind_primitive, b1, 3, 2, 0.1, UNIFORM2, UNIFORM2, 10, 1, seed=0)
        with pytest.raises(EtaTooSmall):
            simulate_coupling(blind_primitive, b1, 1, 1, 0.1, UNIFORM2, UNIFORM2, 10, 1, seed=0)
        with pytest.raises(ValueError):
            simulate_coupling(blind_primitive, b1, 2, 1, 1.5, UNIFORM2, UNIFORM2, 10, 1, seed=0)

    def test_blind_primitive_gap_and_tail(self, blind_primitive, blind_certificate):
        cert = blind_certificate
        report = run_blind(blind_primitive, cert, 4000)
        assert abs(report.mean_gap) <= 5 * cert.epsilon + 3 * report.gap_stderr
        omega, _ = compute_parameters(cert.epsilon, cert.m_eps, cert.delta_eps, blind_primitive.n_states)
        tail, tail_err = stopping_tail(report, omega)
        assert tail <= (1.0 - cert.delta_eps ** 2) ** omega + 3 * tail_err
        assert sum(report.t_ell_histogram.values()) == 4000 * 2

    def test_hidden_payoff_matches_the_exact_oracle(self, blind_primitive, blind_certificate):
        report = run_blind(blind_primitive, blind_certificate, 4000)
        exact = exact_payoff(
            blind_primitive, blind_primitive.initial_belief, UNIFORM2, UNIFORM2, report.horizon,
        )
        assert report.mean_payoff == pytest.approx(exact, abs=4 * report.payoff_stderr + 1e-9)

    def test_abstract_state_strategy_matches_abstract_payoff(self, blind_primitive, blind_certificate, rng):
        eta = 2 * blind_certificate.m_eps
        ag = build_abstract(blind_primitive, blind_primitive.initial_belief, eta, cap=100_000)
        sigma_A = AbstractStateStrategy({x: rng.dirichlet(np.ones(2)) for x in ag.states}, 2)
        report = run_blind(blind_primitive, blind_certificate, 4000, sigma_A=sigma_A)
        exact = abstract_payoff(ag, sigma_A, report.horizon)
        assert report.mean_abstract_payoff == pytest.approx(
            exact, abs=4 * report.abstract_payoff_stderr + 1e-9,
        )

    def test_hidden_payoff_under_a_belief_rule(self, blind_primitive, blind_certificate):
        tau = BeliefStationaryStrategy(lambda b: np.array([1.0 + 3.0 * b.probs[0], 1.0]), 2)
        report = run_blind(blind_primitive, blind_certificate, 4000, tau=tau)
        exact = exact_payoff(blind_primitive, blind_primitive.initial_belief, UNIFORM2, tau, report.horizon)
        assert report.mean_payoff == pytest.approx(exact, abs=4 * report.payoff_stderr + 1e-9)

    @pytest.mark.slow
    def test_blind_primitive_gap_at_scale(self, blind_primitive, blind_certificate):
        report = run_blind(blind_primitive, blind_certificate, 100_000, threads=4)
        assert abs(report.mean_gap) <= 5 * blind_certificate.epsilon + 3 * report.gap_stderr

    def test_threads_do_not_change_the_report(self, blind_primitive, blind_certificate):
        single = run_blind(blind_primitive, blind_certificate, 300, threads=1)
        pooled = run_blind(blind_primitive, blind_certificate, 300, threads=2)
        assert single.model_dump() == pooled.model_dump()

    def test_filled_strategies_run_on_one_thread(self, blind_primitive, rng, caplog):
        sigma = HistoryTableStrategy({}, 2, fill=rng)
        with caplog.at_level(logging.WARNING, logger="coupling.simulator"):
            simulate_coupling(
                blind_primitive, blind_primitive.initial_belief, 2, 1, 0.2, sigma, UNIFORM2, 20, 1,
                seed=0, threads=2,
            )
        assert "one thread" in caplog.text

    def test_trace_rows(self, blind_primitive, blind_certificate):
        report = run_blind(blind_primitive, blind_certificate, 20, trace_episodes=1)
        assert len(report.trace) == report.horizon
        assert [row["stage"] for row in report.trace] == list(range(1, report.horizon + 1))
        assert "trace" not in report.model_dump()


class TestContraction:
    def test_counterexample_zero_block_contracts_by_half(self, counterexample):
        c1, c2 = counterexample.action1_index("c"), counterexample.action2_index("c")
        d = counterexample.signal_index("d|zero")
        distances = contraction_trace(counterexample, zero_block_belief(1), zero_block_belief(3), 20, c1, c2, d)
        assert len(distances) == 21
        for m, distance in enumerate(distances):
            assert distance == pytest.approx(0.75 / 2 ** m, abs=1e-12)
            assert distance <= 2.0 * 2.0 ** -m

    def test_weak_ergodicity_on_blind_primitive(self, blind_primitive):
        tau_bar = max(ergodicity_coefficient(blind_primitive.matrices[step]) for step in blind_primitive.alphabet)
        worst, mean = weak_ergodicity_gap(blind_primitive, 8, samples=200, seed=3)
        assert mean <= worst <= 2.0 * tau_bar ** 8 + 1e-12


class TestReset:
    def test_best_common_cluster(self):
        terminals = np.array([
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [1.0, 0.0]],
        ])
        assert best_common_cluster(terminals, 0.1) == pytest.approx(0.5)
        assert best_common_cluster(terminals, 2.0) == pytest.approx(1.0)

    def test_chunked_centers_match_a_direct_search(self, rng):
        terminals = rng.dirichlet(np.ones(3), size=(3, 40))
        expected = max(
            min(np.mean(np.abs(terminals[k] - center).sum(axis=1) <= 0.4) for k in range(3))
            for center in terminals.reshape(-1, 3)
        )
        for chunk in (1, 7, 256):
            assert best_common_cluster(terminals, 0.4, chunk=chunk) == pytest.approx(expected)

    def test_one_state_game_always_resets(self, constant_game):
        report = doeblin_reset_probability(constant_game(0.5, 2, 2), 3, 0.1, strategy_pairs=3, seed=0, runs=20)
        assert report.witness == 1.0 and report.stderr == 0.0
        assert len(report.per_pair) == 3

    def test_blind_primitive_witness(self, blind_primitive, blind_certificate):
        m = blind_certificate.m_eps
        report = doeblin_reset_probability(blind_primitive, m, 0.2, strategy_pairs=5, seed=7, runs=400)
        # every action word of length m is followed with at least this probability from each vertex
        floor = (1.0 / (blind_primitive.n_actions1 * blind_primitive.n_actions2)) ** m
        assert report.witness >= floor - 3 * report.stderr
        assert report.witness == min(report.per_pair)

    def test_rejects_bad_sizes(self, blind_primitive):
        with pytest.raises(ValueError):
            doeblin_reset_probability(blind_primitive, 0, 0.2, strategy_pairs=1, seed=0)


class TestSignalDraws:
    def test_equal_laws_share_one_draw(self):
        law = np.array([0.2, 0.5, 0.3])
        for u, u_abs in [(0.1, 0.9), (0.6, 0.05), (0.95, 0.3)]:
            s, s_abs = draw_signals(law, law.copy(), u, u_abs)
            assert s == s_abs

    def test_distinct_laws_read_their_own_variate(self):
        law, law_abs = np.array([0.5, 0.5]), np.array([0.9, 0.1])
        # shared u=0.7 would give signal 0 under law_abs; its own variate gives 1
        assert draw_signals(law, law_abs, 0.7, 0.95) == (1, 1)
        assert draw_signals(law, law_abs, 0.7, 0.2) == (1, 0)

    def test_abstract_signal_marginal_is_exact(self, rng):
        law, law_abs = np.array([0.5, 0.5]), np.array([0.8, 0.2])
        draws = np.array([draw_signals(law, law_abs, *rng.random(2)) for _ in range(4000)])
        assert np.mean(draws[:, 1] == 0) == pytest.approx(0.8, abs=0.03)
        # independent variates: the joint law factorizes
        assert np.mean((draws[:, 0] == 0) & (draws[:, 1] == 0)) == pytest.approx(0.4, abs=0.03)
