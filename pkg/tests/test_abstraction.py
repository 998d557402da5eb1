"""Tests for the belief grid, the abstract game and the history maps"""
import json

import numpy as np
import pytest

from abstraction.abstract_game import (
    AbstractState,
    abstract_to_document,
    abstract_update,
    build_abstract,
    initial_state,
    stage_reward_at,
)
from abstraction.grid import GridPoint, grid_points, project
from abstraction.history_maps import AbstractHistory, map_history_xi, map_history_xiA
from beliefs.engine import enumerate_admissible, stage_reward
from beliefs.oracles import exact_nstage_value
from games.io import parse_game
from games.spec import Belief, Step
from games.validation import validate_game
from solver.shapley import shapley_nstage
from utils.errors import CapExceeded, EtaTooSmall, InadmissibleHistory, InadmissibleSignal


def sparse_belief(rng, k):
    """Dirichlet belief with a random subset of coordinates zeroed"""
    probs = rng.dirichlet(np.ones(k))
    keep = rng.random(k) < 0.7
    keep[rng.integers(k)] = True
    probs = np.where(keep, probs, 0.0)
    return Belief(probs / probs.sum())


class TestGrid:
    def test_grid_points(self):
        points = list(grid_points(2, 4))
        assert [p.numerators for p in points] == [(0, 4), (1, 3), (2, 2), (3, 1), (4, 0)]
        assert len(list(grid_points(3, 4))) == 15

    def test_grid_point_rejects_bad_numerators(self):
        with pytest.raises(ValueError):
            GridPoint((1, 1), 3)

    def test_examples(self):
        assert project(Belief([1.0, 0.0]), 7).numerators == (7, 0)
        near = project(Belief([0.3, 0.7]), 4)
        assert near.numerators == (1, 3)
        assert near.belief.distance(Belief([0.3, 0.7])) == pytest.approx(0.1)
        kept = project(Belief([0.25, 0.75]), 2)
        assert kept.numerators == (1, 1)

    def test_support_too_large(self):
        with pytest.raises(EtaTooSmall):
            project(Belief([0.2, 0.3, 0.5]), 2)

    def test_random_beliefs(self, rng):
        for _ in range(1000):
            k = int(rng.integers(2, 5))
            eta = int(rng.choice([k * k, 2 * k * k]))
            b = sparse_belief(rng, k)
            point = project(b, eta)
            assert point.support == b.support
            assert b.distance(point.belief) <= k * k / eta + 1e-12

    def test_nearest_among_support_preserving_points(self, rng):
        for _ in range(200):
            k = int(rng.integers(2, 4))
            b = sparse_belief(rng, k)
            eta = int(rng.integers(len(b.support), 9))
            candidates = [p for p in grid_points(k, eta) if p.support == b.support]
            best = min(b.distance(p.belief) for p in candidates)
            assert b.distance(project(b, eta).belief) == pytest.approx(best, abs=1e-9)


class TestAbstractUpdate:
    def test_first_step_extends_the_trail(self, make_random_game):
        spec = make_random_game(k=2, i=2, j=2, s=2, positive=True)
        x1 = initial_state(spec.initial_belief)
        x2 = abstract_update(spec, x1, 1, 0, 1, eta=3)
        assert x2 == AbstractState(anchor=spec.initial_belief, trail=(Step(1, 0, 1),))
        assert x2.stage_in_block == 2

    def test_block_end_reanchors_on_the_grid(self, make_random_game):
        spec = make_random_game(k=2, i=2, j=2, s=2, positive=True)
        x = initial_state(spec.initial_belief)
        for _ in range(2):
            x = abstract_update(spec, x, 0, 0, 0, eta=2)
        assert isinstance(x.anchor, GridPoint) and x.signal == 0
        assert x.stage_in_block == 1
        x = abstract_update(spec, x, 0, 0, 1, eta=2)
        assert x.trail == (Step(0, 0, 1),) and x.signal is None

    def test_inadmissible_signal(self, counterexample):
        x1 = initial_state(counterexample.initial_belief)
        with pytest.raises(InadmissibleSignal):
            abstract_update(counterexample, x1, 0, 0, counterexample.signal_index("d|oneabs"), eta=7)


class TestBuildAbstract:
    def test_one_state_game(self, constant_game):
        spec = constant_game(0.7, n_actions1=2, n_actions2=2)
        ag = build_abstract(spec, spec.initial_belief, 2, cap=1000)
        np.testing.assert_allclose(ag.reward, 0.7)
        # x1 and its four trails, then the re-anchored state and its four trails
        assert ag.n_states == 10
        assert ag.stats()["edges"] == ag.transition.nnz

    def test_rows_are_distributions(self, make_random_game):
        spec = make_random_game(k=3, i=2, j=2, s=2)
        ag = build_abstract(spec, spec.initial_belief, 3, cap=50_000)
        row_sums = np.asarray(ag.transition.sum(axis=1)).ravel()
        np.testing.assert_allclose(row_sums, 1.0, atol=1e-12)

    def test_rewards_match_projected_beliefs(self, make_random_game):
        spec = make_random_game(k=3, i=2, j=2, s=2)
        ag = build_abstract(spec, spec.initial_belief, 3, cap=50_000)
        for x, state in enumerate(ag.states[:50]):
            np.testing.assert_allclose(ag.reward[x], stage_reward_at(spec, state), atol=1e-12)

    def test_revealing_game_projects_to_diracs(self, revealing_chain):
        ag = build_abstract(revealing_chain, revealing_chain.initial_belief, 2, cap=1000)
        assert np.all(np.isclose(ag.beliefs.max(axis=1), 1.0))

    def test_eta_below_state_count(self, counterexample):
        with pytest.raises(EtaTooSmall):
            build_abstract(counterexample, counterexample.initial_belief, 3, cap=1000)

    def test_state_cap(self, blind_primitive):
        with pytest.raises(CapExceeded):
            build_abstract(blind_primitive, blind_primitive.initial_belief, 4, cap=10)

    def test_document_is_a_valid_game(self, blind_primitive):
        ag = build_abstract(blind_primitive, blind_primitive.initial_belief, 2, cap=1000)
        spec = parse_game(json.dumps(abstract_to_document(ag)))
        assert spec.n_states == ag.n_states
        assert validate_game(spec).ok

    def test_within_block_values_are_exact(self, make_random_game):
        for s in (1, 2, 2, 1, 2):
            spec = make_random_game(k=2, i=2, j=2, s=s)
            for eta in (2, 3):
                ag = build_abstract(spec, spec.initial_belief, eta, cap=100_000)
                for n in range(1, eta + 1):
                    abstract = shapley_nstage(ag, n).at(ag.initial)
                    exact = exact_nstage_value(spec, spec.initial_belief, n)
                    assert abstract == pytest.approx(exact, abs=1e-9)


class TestHistoryMaps:
    def test_empty_history(self, blind_primitive):
        b1 = blind_primitive.initial_belief
        mapped = map_history_xi(blind_primitive, b1, 2, ())
        assert mapped == AbstractHistory((initial_state(b1),))
        assert map_history_xiA(blind_primitive, b1, 2, mapped) == ()

    def test_round_trip(self, make_random_game):
        spec = make_random_game(k=2, i=2, j=2, s=2)
        b1 = spec.initial_belief
        ag = build_abstract(spec, b1, 2, cap=100_000)
        for node in enumerate_admissible(spec, b1, 4, cap=100_000):
            mapped = map_history_xi(spec, b1, 2, node.history)
            assert len(mapped) == 3
            assert all(x in ag.index for x in mapped.states)
            assert map_history_xiA(spec, b1, 2, mapped) == node.history

    def test_block_length_history_reaches_the_grid(self, make_random_game):
        spec = make_random_game(k=2, i=2, j=2, s=2, positive=True)
        b1 = spec.initial_belief
        h = (Step(0, 1, 0), Step(1, 1, 1), Step(0, 0, 1))
        mapped = map_history_xi(spec, b1, 3, h)
        last = mapped.states[-1]
        assert isinstance(last.anchor, GridPoint) and last.signal == 1

    def test_inadmissible(self, counterexample):
        b1 = counterexample.initial_belief
        bad = (Step(0, 0, counterexample.signal_index("d|oneabs")),)
        with pytest.raises(InadmissibleHistory):
            map_history_xi(counterexample, b1, 7, bad)
        stranger = AbstractHistory((initial_state(Belief.uniform(7)),))
        with pytest.raises(InadmissibleHistory):
            map_history_xiA(counterexample, b1, 7, stranger)

    def test_stage_rewards_follow_the_abstract_beliefs(self, blind_primitive):
        b1 = blind_primitive.initial_belief
        mapped = map_history_xi(blind_primitive, b1, 2, (Step(0, 0, 0),))
        np.testing.assert_allclose(
            stage_reward_at(blind_primitive, mapped.states[0]), stage_reward(blind_primitive, b1),
        )
