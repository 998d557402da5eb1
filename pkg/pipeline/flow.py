"""
Approximation of the uniform value as a LangGraph state graph

Flow:
1. route → picks the certificate source (user / primitive / ergodic)
2. only the chosen certificate node runs
3. parameters → abstract → solve, each adding to the shared state
"""
import logging
import operator
from typing import Annotated, Any, Dict, List, Literal, Optional, TypedDict

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict

from abstraction.abstract_game import build_abstract
from pipeline.parameters import compute_parameters
from solver.shapley import uniform_value_estimate
from structure.certificates import DoeblinCertificate, ergodic_certificate, primitive_certificate
from structure.patterns import PatternKind, minimal_uniform_length
from utils.config import Caps
from utils.errors import NoCertificate

logger = logging.getLogger(__name__)


class PipelineReport(BaseModel):
    """Everything the pipeline computed, and how far its guarantee reaches"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    game: str
    epsilon: float
    route: Literal["user", "primitive", "ergodic"]
    certificate: DoeblinCertificate
    omega_eps: int
    eta_eps: int
    eta_used: int
    eta_override: Optional[int] = None
    abstract_stats: Dict[str, Any]
    value: float
    solver_tol: float
    diagnostics: Dict[str, Any]
    caps_hit: Dict[str, bool]
    guarantee: Literal["certified", "downgraded"]
    guarantee_reasons: List[str]
    messages: List[str]


# ========== STATE DEFINITION ==========
class PipelineState(TypedDict):
    """State that flows through the graph"""
    messages: Annotated[list, operator.add]  # progress notes from every node
    spec: Any
    eps: float
    caps: Caps
    tol: float
    eta_override: Optional[int]
    user_certificate: Optional[DoeblinCertificate]
    route: str
    certificate: Optional[DoeblinCertificate]
    omega: int
    eta_eps: int
    eta: int
    abstract_game: Any
    value: float
    diagnostics: dict
    caps_hit: dict


# ========== NODES ==========
def route_node(state: PipelineState):
    """
    Decide where the certificate comes from.
    A user certificate always wins; primitive works for any signals; ergodic needs a blind game.
    """
    spec = state["spec"]
    if state.get("user_certificate") is not None:
        route = "user"
    elif minimal_uniform_length(spec, PatternKind.POSITIVE) is not None:
        route = "primitive"
    elif spec.is_blind and minimal_uniform_length(spec, PatternKind.SCRAMBLING) is not None:
        route = "ergodic"
    else:
        raise NoCertificate("game is neither primitive nor blind-ergodic and no certificate was supplied")
    return {"route": route, "messages": [f"certificate route: {route}"]}


def user_certificate_node(state: PipelineState):
    certificate = state["user_certificate"]
    return {
        "certificate": certificate,
        "messages": [f"user certificate m_eps={certificate.m_eps} delta_eps={certificate.delta_eps:.6g}"],
    }


def primitive_node(state: PipelineState):
    certificate = primitive_certificate(state["spec"], state["eps"], cap=state["caps"].enum_cap, strict=True)
    caps_hit = dict(state["caps_hit"], mu_enumeration=certificate.mu_method == "lower_bound")
    return {
        "certificate": certificate,
        "caps_hit": caps_hit,
        "messages": [f"primitive certificate m_eps={certificate.m_eps} "
                     f"delta_eps={certificate.delta_eps:.6g} mu={certificate.mu_method}"],
    }


def ergodic_node(state: PipelineState):
    certificate = ergodic_certificate(state["spec"], state["eps"], cap=state["caps"].enum_cap)
    return {
        "certificate": certificate,
        "messages": [f"ergodic certificate m_eps={certificate.m_eps} delta_eps={certificate.delta_eps:.6g}"],
    }


def parameters_node(state: PipelineState):
    certificate = state["certificate"]
    omega, eta_eps = compute_parameters(
        state["eps"], certificate.m_eps, certificate.delta_eps, state["spec"].n_states,
    )
    eta = state["eta_override"] or eta_eps
    note = f"omega={omega} eta_eps={eta_eps}"
    if state["eta_override"]:
        note += f" (override eta={eta})"
        logger.warning("eta override %d in place of %d: the precision guarantee does not apply", eta, eta_eps)
    return {"omega": omega, "eta_eps": eta_eps, "eta": eta, "messages": [note]}


def abstract_node(state: PipelineState):
    spec = state["spec"]
    ag = build_abstract(spec, spec.initial_belief, state["eta"], state["caps"].state_cap)
    return {"abstract_game": ag, "messages": [f"abstract game: {ag.n_states} states"]}


def solve_node(state: PipelineState):
    value, diagnostics = uniform_value_estimate(state["abstract_game"], tol=state["tol"])
    return {
        "value": value,
        "diagnostics": diagnostics.to_dict(),
        "messages": [f"uniform value estimate {value:.9f}"],
    }


# ========== ROUTING LOGIC ==========
def route_to_certificate(state: PipelineState) -> Literal["user_certificate", "primitive", "ergodic"]:
    route = state.get("route", "primitive")
    if route == "user":
        return "user_certificate"
    if route == "ergodic":
        return "ergodic"
    return "primitive"


# ========== GRAPH CONSTRUCTION ==========
def create_graph():
    """Build the pipeline state graph"""
    workflow = StateGraph(PipelineState)

    workflow.add_node("route", route_node)
    workflow.add_node("user_certificate", user_certificate_node)
    workflow.add_node("primitive", primitive_node)
    workflow.add_node("ergodic", ergodic_node)
    workflow.add_node("parameters", parameters_node)
    workflow.add_node("abstract", abstract_node)
    workflow.add_node("solve", solve_node)

    workflow.set_entry_point("route")

    workflow.add_conditional_edges(
        "route",
        route_to_certificate,
        {
            "user_certificate": "user_certificate",
            "primitive": "primitive",
            "ergodic": "ergodic",
        },
    )

    workflow.add_edge("user_certificate", "parameters")
    workflow.add_edge("primitive", "parameters")
    workflow.add_edge("ergodic", "parameters")
    workflow.add_edge("parameters", "abstract")
    workflow.add_edge("abstract", "solve")
    workflow.add_edge("solve", END)

    return workflow.compile()


# ========== RUN FUNCTION ==========
def approximate_uniform_value(spec, eps, certificate=None, caps=None, eta_override=None, tol=1e-6):
    """
    Run the whole pipeline on a game
    Args:
        spec: GameSpec
        eps: target precision in (0, 1)
        certificate: optional DoeblinCertificate that skips derivation
        caps: Caps, from the environment by default
        eta_override: recall to use instead of eta_eps (downgrades the guarantee)
        tol: agreement tolerance of the uniform-value estimate
    Returns:
        PipelineReport
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    caps = caps or Caps.from_env()
    graph = create_graph()

    initial_state = {
        "messages": [],
        "spec": spec,
        "eps": eps,
        "caps": caps,
        "tol": tol,
        "eta_override": eta_override,
        "user_certificate": certificate,
        "route": "",
        "certificate": None,
        "omega": 0,
        "eta_eps": 0,
        "eta": 0,
        "abstract_game": None,
        "value": 0.0,
        "diagnostics": {},
        "caps_hit": {"mu_enumeration": False},
    }

    result = graph.invoke(initial_state)

    reasons = []
    if eta_override:
        reasons.append(f"eta_override={eta_override} used in place of eta_eps={result['eta_eps']}")
    if result["route"] == "user":
        reasons.append("certificate supplied by the caller, not derived from the game")
    return PipelineReport(
        game=spec.name,
        epsilon=eps,
        route=result["route"],
        certificate=result["certificate"],
        omega_eps=result["omega"],
        eta_eps=result["eta_eps"],
        eta_used=result["eta"],
        eta_override=eta_override,
        abstract_stats=result["abstract_game"].stats(),
        value=result["value"],
        solver_tol=tol,
        diagnostics=result["diagnostics"],
        caps_hit=result["caps_hit"],
        guarantee="downgraded" if reasons else "certified",
        guarantee_reasons=reasons,
        messages=result["messages"],
    )


def initial_belief_gap(spec, beliefs, eps, caps=None, eta_override=None, tol=1e-6):
    """
    Pipeline values from several initial beliefs and their spread
    Returns:
        (values, max - min)
    """
    values = []
    certificate = None
    for belief in beliefs:
        report = approximate_uniform_value(
            spec.with_initial_belief(belief), eps, certificate=certificate,
            caps=caps, eta_override=eta_override, tol=tol,
        )
        certificate = report.certificate
        values.append(report.value)
    return values, max(values) - min(values)
