"""Tests for the parameter formulas and the uniform-value pipeline"""
import numpy as np
import pytest

from beliefs.oracles import exact_nstage_value
from games.fixtures import matching_pennies_game, recurrent_chain_game
from games.spec import Belief
from pipeline.flow import approximate_uniform_value, create_graph, initial_belief_gap
from pipeline.parameters import compute_parameters
from solver.shapley import uniform_value_estimate
from structure.certificates import DoeblinCertificate
from utils.config import Caps
from utils.errors import CapExceeded, NoCertificate

CAPS = Caps(state_cap=100_000, enum_cap=100_000)


class TestComputeParameters:
    def test_worked_example(self):
        assert compute_parameters(0.5, 2, 0.5, 2) == (3, 24)

    def test_sure_reset(self):
        assert compute_parameters(0.5, 1, 1.0, 2) == (4, 16)

    def test_coverage_floor(self):
        # log(eps)/log(1-delta^2) is tiny here, so |K|^2/m decides
        omega, eta = compute_parameters(0.9, 1, 0.99, 3)
        assert omega == 9
        assert eta == 9 * 1 * 4

    def test_smaller_eps_never_shrinks(self):
        previous = (0, 0)
        for eps in (0.5, 0.25, 0.1, 0.05):
            current = compute_parameters(eps, 2, 0.3, 2)
            assert current[0] >= previous[0] and current[1] >= previous[1]
            previous = current

    @pytest.mark.parametrize("args", [(0.0, 1, 0.5, 2), (0.5, 0, 0.5, 2), (0.5, 1, 0.0, 2), (0.5, 1, 1.5, 2)])
    def test_rejects_bad_input(self, args):
        with pytest.raises(ValueError):
            compute_parameters(*args)


class TestPipeline:
    def test_graph_compiles(self):
        graph = create_graph()
        assert {"route", "primitive", "ergodic", "parameters", "abstract", "solve"} <= set(graph.get_graph().nodes)

    def test_constant_game(self, constant_game):
        spec = constant_game(0.3)
        report = approximate_uniform_value(spec, 0.5, caps=CAPS)
        assert report.value == pytest.approx(0.3, abs=1e-6)
        assert report.route == "primitive"
        assert (report.omega_eps, report.eta_eps, report.eta_used) == (1, 4, 4)
        assert report.guarantee == "certified" and not report.guarantee_reasons

    def test_matching_pennies(self, revealing_pennies):
        report = approximate_uniform_value(revealing_pennies, 0.5, caps=CAPS)
        assert report.value == pytest.approx(0.5, abs=1e-6)

    def test_revealing_chain_matches_direct_solve(self, revealing_chain):
        certificate = DoeblinCertificate(epsilon=0.5, m_eps=1, delta_eps=0.4, source="user")
        report = approximate_uniform_value(
            revealing_chain, 0.5, certificate=certificate, caps=CAPS, eta_override=3, tol=1e-8,
        )
        direct, _ = uniform_value_estimate(recurrent_chain_game().to_stochastic_game(), tol=1e-8)
        assert report.value == pytest.approx(direct, abs=1e-6)
        assert report.route == "user"
        assert report.guarantee == "downgraded"
        assert "eta_override=3" in report.guarantee_reasons[0]

    def test_no_certificate(self):
        from games.fixtures import build_fixture

        with pytest.raises(NoCertificate):
            approximate_uniform_value(build_fixture("revealing-cycle"), 0.5, caps=CAPS)

    def test_blind_primitive_with_small_recall(self, blind_primitive):
        report = approximate_uniform_value(blind_primitive, 0.25, caps=CAPS, eta_override=4)
        assert report.certificate.strict
        assert report.eta_used == 4 and report.eta_eps > 4
        assert report.caps_hit == {"mu_enumeration": False}
        assert abs(report.value - exact_nstage_value(blind_primitive, blind_primitive.initial_belief, 6)) <= 0.25
        assert report.diagnostics["converged"]

    def test_state_cap(self, blind_primitive):
        with pytest.raises(CapExceeded):
            approximate_uniform_value(blind_primitive, 0.25, caps=Caps(state_cap=5, enum_cap=1000), eta_override=4)

    def test_reports_are_reproducible(self, revealing_pennies):
        first = approximate_uniform_value(revealing_pennies, 0.5, caps=CAPS)
        second = approximate_uniform_value(revealing_pennies, 0.5, caps=CAPS)
        assert first.model_dump() == second.model_dump()

    def test_initial_belief_gap(self, blind_primitive):
        beliefs = [Belief([1.0, 0.0]), Belief([0.0, 1.0]), Belief([0.5, 0.5])]
        values, spread = initial_belief_gap(blind_primitive, beliefs, 0.25, caps=CAPS, eta_override=4)
        assert len(values) == 3
        assert spread == pytest.approx(max(values) - min(values))
        assert spread <= 0.5 + 1e-6
        assert np.all((np.array(values) >= 0.0) & (np.array(values) <= 1.0))
