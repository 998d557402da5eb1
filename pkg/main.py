"""Command-line entry point of the Doeblin hidden stochastic game toolkit"""
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from abstraction.abstract_game import abstract_to_document, build_abstract
from beliefs.oracles import exact_nstage_value
from coupling.simulator import simulate_coupling, stopping_tail
from coupling.strategies import UniformStrategy
from games.fixtures import FIXTURES, build_fixture
from games.io import dump_game, load_game
from games.spec import MASS_TOL
from games.validation import validate_game
from pipeline.flow import approximate_uniform_value
from pipeline.parameters import compute_parameters
from solver.shapley import UniformDiagnostics, discounted_value, shapley_nstage, uniform_value_estimate
from structure.certificates import DoeblinCertificate, ergodic_certificate, primitive_certificate
from structure.coefficients import birkhoff_coefficient, ergodicity_coefficient
from structure.patterns import PatternKind, minimal_uniform_length
from utils.config import Caps, RunConfig, configure_logging, default_threads
from utils.errors import (
    CapExceeded,
    DoeblinError,
    EtaTooSmall,
    GameFileError,
    InvalidBlockStructure,
    NoCertificate,
    NoConvergence,
    NotBlind,
    NotErgodic,
    NotPrimitive,
    NumericalFailure,
)
from utils.reports import to_jsonable, write_csv, write_json

# Fix encoding for Windows console to handle the symbols in reports
if sys.platform == 'win32':
    try:
        sys.stdout.reconfigure(encoding='utf-8')
        sys.stderr.reconfigure(encoding='utf-8')
    except AttributeError:
        import codecs
        sys.stdout = codecs.getwriter('utf-8')(sys.stdout.buffer, 'strict')
        sys.stderr = codecs.getwriter('utf-8')(sys.stderr.buffer, 'strict')

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2
DIAGNOSTIC_FIELDS = ["iteration", "kind", "parameter", "value"]

# per-command tolerance when --tol is not given
SOLVER_TOL = 1e-9
UNIFORM_TOL = 1e-6

# failures that mean "the input or the request is wrong"
INPUT_ERRORS = (GameFileError, KeyError, EtaTooSmall, InvalidBlockStructure, NotBlind,
                ValidationError, ValueError)
# failures that mean "the computation hit a cap or could not be certified"
LIMIT_ERRORS = (CapExceeded, NoConvergence, NumericalFailure, NoCertificate, NotErgodic, NotPrimitive)


# ========== INPUT ==========
def load_spec(config):
    if config.input_path:
        return load_game(config.input_path)
    if config.fixture:
        return build_fixture(config.fixture)
    raise ValueError(f"{config.command} needs --input FILE or --fixture NAME")


def _tol(config, default):
    return default if config.tol is None else config.tol


def _eta_or_default(config, spec):
    if config.eta is not None:
        return config.eta
    logger.warning("no --eta given; using the smallest valid recall |K|=%d", spec.n_states)
    return spec.n_states


def _write_diagnostics(config, diagnostics):
    if config.diagnostics_path:
        write_csv(config.diagnostics_path, diagnostics.rows(), DIAGNOSTIC_FIELDS)
        print(f"Diagnostics written to {config.diagnostics_path}")


def _user_certificate(config):
    if config.m_eps is None or config.delta_eps is None:
        return None
    return DoeblinCertificate(epsilon=config.epsilon, m_eps=config.m_eps, delta_eps=config.delta_eps, source="user")


def _certificate(spec, config):
    user = _user_certificate(config)
    if user is not None:
        return user
    kind = config.kind
    if kind is None:
        if minimal_uniform_length(spec, PatternKind.POSITIVE) is not None:
            kind = "primitive"
        elif spec.is_blind:
            kind = "ergodic"
        else:
            raise NoCertificate("game is not primitive and not blind")
    if kind == "primitive":
        return primitive_certificate(spec, config.epsilon, cap=config.enum_cap, strict=config.strict)
    return ergodic_certificate(spec, config.epsilon, cap=config.enum_cap)


# ========== COMMANDS ==========
def cmd_validate(config):
    spec = load_spec(config)
    report = validate_game(spec, tol=_tol(config, MASS_TOL))
    print(f"{spec.name}: {len(report)} violation(s)")
    for violation in report:
        print(f"  - {violation.message}")
    return report.to_dict(), EXIT_OK if report.ok else EXIT_INPUT


def cmd_coefficients(config):
    spec = load_spec(config)
    rows = []
    for step in spec.alphabet:
        i, j, s = step
        row = {
            "a1": spec.actions1[i], "a2": spec.actions2[j], "signal": spec.signals[s],
            "tau_p": birkhoff_coefficient(spec.matrices[i, j, s]),
        }
        if spec.is_blind:
            row["tau_e"] = ergodicity_coefficient(spec.matrices[i, j, s])
        rows.append(row)
        print(f"  P({row['a1']},{row['a2']},{row['signal']}): tau_p={row['tau_p']:.6f}"
              + (f" tau_e={row['tau_e']:.6f}" if "tau_e" in row else ""))
    return {"game": spec.name, "blind": spec.is_blind, "coefficients": rows}, EXIT_OK


def cmd_check(config):
    spec = load_spec(config)
    kind = PatternKind.SCRAMBLING if config.kind == "ergodic" else PatternKind.POSITIVE
    m_star = minimal_uniform_length(spec, kind)
    print(f"{spec.name}: minimal uniform {kind.value} length = {m_star}")
    return {"game": spec.name, "kind": config.kind or "primitive", "m_star": m_star}, EXIT_OK


def cmd_certificate(config):
    spec = load_spec(config)
    certificate = _certificate(spec, config)
    print(f"{certificate.source} certificate: m_eps={certificate.m_eps} delta_eps={certificate.delta_eps:.6g}")
    return {"game": spec.name, "certificate": certificate}, EXIT_OK


def cmd_build_abstract(config):
    spec = load_spec(config)
    ag = build_abstract(spec, spec.initial_belief, _eta_or_default(config, spec), config.state_cap)
    stats = ag.stats()
    print(f"abstract game: {stats['states']} states, {stats['edges']} edges")
    report = {"game": spec.name, "stats": stats}
    if config.include_document:
        report["abstract_game"] = abstract_to_document(ag)
    return report, EXIT_OK


def cmd_solve_nstage(config):
    spec = load_spec(config)
    n = config.horizon or 1
    if config.eta is not None:
        ag = build_abstract(spec, spec.initial_belief, config.eta, config.state_cap)
        values = shapley_nstage(ag, n, tol=_tol(config, SOLVER_TOL))
        value, source = values.at(ag.initial), f"abstract game eta={config.eta}"
    else:
        value, source = exact_nstage_value(spec, spec.initial_belief, n, cap=config.enum_cap), "exact recursion"
    print(f"v_{n} = {value:.9f} ({source})")
    return {"game": spec.name, "n": n, "value": value, "source": source}, EXIT_OK


def cmd_solve_uniform(config):
    spec = load_spec(config)
    eta = _eta_or_default(config, spec)
    ag = build_abstract(spec, spec.initial_belief, eta, config.state_cap)
    value, diagnostics = uniform_value_estimate(ag, tol=_tol(config, UNIFORM_TOL))
    report = {"game": spec.name, "eta": eta, "value": value, "diagnostics": diagnostics.to_dict()}
    _write_diagnostics(config, diagnostics)
    if config.discount is not None:
        discounted = discounted_value(ag, config.discount, tol=_tol(config, SOLVER_TOL))
        report["discounted_value"] = discounted.at(ag.initial)
    print(f"uniform value estimate = {value:.9f}")
    return report, EXIT_OK


def cmd_pipeline(config):
    spec = load_spec(config)
    report = approximate_uniform_value(
        spec, config.epsilon, certificate=_user_certificate(config), caps=config.caps,
        eta_override=config.eta_override, tol=_tol(config, UNIFORM_TOL),
    )
    for message in report.messages:
        print(f"  {message}")
    _write_diagnostics(config, UniformDiagnostics.from_dict(report.diagnostics))
    print(f"value = {report.value:.9f} ({report.guarantee})")
    return {"pipeline": report}, EXIT_OK


def cmd_simulate_coupling(config):
    spec = load_spec(config)
    if config.m_eps is not None and config.delta_eps is None:
        m_eps, delta = config.m_eps, None
    else:
        certificate = _certificate(spec, config)
        m_eps, delta = certificate.m_eps, certificate.delta_eps
    eta = config.eta
    if eta is None:
        eta = m_eps * max(1, -(-spec.n_states // m_eps))
        logger.warning("no --eta given; using eta=%d, the smallest multiple of m_eps not below |K|", eta)
    report = simulate_coupling(
        spec, spec.initial_belief, eta, m_eps, config.epsilon,
        UniformStrategy(spec.n_actions1), UniformStrategy(spec.n_actions2),
        config.episodes, config.blocks, config.seed,
        threads=config.threads, trace_episodes=1 if config.trace_path else 0,
    )
    out = {"coupling": report}
    if delta is not None:
        omega, _ = compute_parameters(config.epsilon, m_eps, delta, spec.n_states)
        tail, tail_err = stopping_tail(report, omega)
        out["stopping_tail"] = {
            "omega": omega, "empirical": tail, "stderr": tail_err, "bound": (1.0 - delta ** 2) ** omega,
        }
    if config.trace_path:
        write_csv(config.trace_path, report.trace,
                  ["episode", "stage", "block", "belief", "abstract_state", "gap", "coupled"])
    print(f"mean gap = {report.mean_gap:.6g} ± {report.gap_stderr:.2g} over {report.episodes} episodes")
    return out, EXIT_OK


def cmd_fixtures(config):
    names = [config.fixture] if config.fixture else sorted(FIXTURES)
    directory = config.output_path or "fixtures"
    written = []
    for name in names:
        path = f"{directory}/{name}.json"
        dump_game(build_fixture(name), path)
        written.append(path)
        print(f"  wrote {path}")
    return {"written": written}, EXIT_OK


HANDLERS = {
    "validate": cmd_validate,
    "coefficients": cmd_coefficients,
    "check": cmd_check,
    "certificate": cmd_certificate,
    "build-abstract": cmd_build_abstract,
    "solve-nstage": cmd_solve_nstage,
    "solve-uniform": cmd_solve_uniform,
    "pipeline": cmd_pipeline,
    "simulate-coupling": cmd_simulate_coupling,
    "fixtures": cmd_fixtures,
}


# ========== RUN ==========
def run(config):
    """
    Dispatch one command
    Args:
        config: RunConfig
    Returns:
        Exit status: 0 success, 1 invalid input or game, 2 cap or convergence failure
    """
    configure_logging(config.verbosity)
    print("=" * 60)
    print(f"Doeblin toolkit: {config.command}")
    print("=" * 60)
    try:
        report, status = HANDLERS[config.command](config)
    except LIMIT_ERRORS as e:
        print(f"Error ({type(e).__name__}): {str(e)}")
        if isinstance(e, NoConvergence) and e.diagnostics is not None:
            _write_diagnostics(config, e.diagnostics)
            if config.output_path:
                write_json(config.output_path, {"config": config, "seed": config.seed,
                                                "error": str(e), "diagnostics": e.diagnostics.to_dict()})
        return EXIT_LIMIT
    except INPUT_ERRORS as e:
        print(f"Error ({type(e).__name__}): {str(e)}")
        return EXIT_INPUT
    except DoeblinError as e:
        print(f"Error ({type(e).__name__}): {str(e)}")
        return EXIT_INPUT

    payload = {"config": config, "seed": config.seed, **report}
    if config.command != "fixtures" and config.output_path:
        write_json(config.output_path, payload)
        print(f"Report written to {config.output_path}")
    elif config.command != "fixtures":
        print(json.dumps(to_jsonable(payload), indent=2))
    print("=" * 60)
    return status


def build_parser():
    parser = argparse.ArgumentParser(description="Doeblin hidden stochastic game toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", dest="input_path", help="game JSON file")
    common.add_argument("--fixture", help=f"built-in game instead of --input ({', '.join(sorted(FIXTURES))})")
    common.add_argument("--output", dest="output_path", help="report file (directory for fixtures)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, help="solver tolerance (1e-9 for LPs, 1e-6 for uniform estimates)")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("-v", "--verbose", dest="verbosity", action="count", default=0)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common])
    sub.add_parser("coefficients", parents=[common])
    check = sub.add_parser("check", parents=[common])
    check.add_argument("--kind", choices=["ergodic", "primitive"], default="primitive")
    certificate = sub.add_parser("certificate", parents=[common])
    certificate.add_argument("--epsilon", type=float, required=True)
    certificate.add_argument("--kind", choices=["ergodic", "primitive"])
    certificate.add_argument("--strict", action="store_true", help="certify contraction of the L1 distance itself")
    abstract = sub.add_parser("build-abstract", parents=[common])
    abstract.add_argument("--eta", type=int, required=True)
    abstract.add_argument("--document", dest="include_document", action="store_true")
    nstage = sub.add_parser("solve-nstage", parents=[common])
    nstage.add_argument("--n", dest="horizon", type=int, required=True)
    nstage.add_argument("--eta", type=int, help="solve the abstract game with this recall")
    uniform = sub.add_parser("solve-uniform", parents=[common])
    uniform.add_argument("--eta", type=int)
    uniform.add_argument("--discount", type=float)
    uniform.add_argument("--diagnostics", dest="diagnostics_path", help="CSV of the refinement trace")
    pipeline = sub.add_parser("pipeline", parents=[common])
    pipeline.add_argument("--epsilon", type=float, required=True)
    pipeline.add_argument("--eta-override", type=int)
    pipeline.add_argument("--m-eps", type=int, help="user certificate length (with --delta-eps)")
    pipeline.add_argument("--delta-eps", type=float, help="user certificate probability (with --m-eps)")
    pipeline.add_argument("--diagnostics", dest="diagnostics_path", help="CSV of the refinement trace")
    coupling = sub.add_parser("simulate-coupling", parents=[common])
    coupling.add_argument("--epsilon", type=float, required=True)
    coupling.add_argument("--eta", type=int)
    coupling.add_argument("--m-eps", type=int)
    coupling.add_argument("--delta-eps", type=float)
    coupling.add_argument("--kind", choices=["ergodic", "primitive"])
    coupling.add_argument("--episodes", type=int, default=1000)
    coupling.add_argument("--blocks", type=int, default=2)
    coupling.add_argument("--trace", dest="trace_path")
    fixtures = sub.add_parser("fixtures", parents=[common])
    fixtures.add_argument("--name", dest="fixture", choices=sorted(FIXTURES))
    return parser


def config_from_args(argv=None):
    args = vars(build_parser().parse_args(argv))
    if args.get("threads") is None:
        args["threads"] = default_threads()
    caps = Caps.from_env()
    return RunConfig(**args, state_cap=caps.state_cap, enum_cap=caps.enum_cap)


def main(argv=None):
    """Parse the command line and run it"""
    try:
        config = config_from_args(argv)
    except (ValidationError, ValueError) as e:
        print(f"Error: {str(e)}")
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
