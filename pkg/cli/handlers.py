"""Command handlers: parse flags, call the services, build the report, pick the exit code."""

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from cli.formatters import render
from cli.parser import build_parser
from config.config_loader import load_config_from_yaml
from config.settings import settings
from infrastructure.linalg import Tolerance
from services.channel_service import channel_service
from services.example_service import example_service
from services.gram_service import gram_service
from services.problem_service import problem_service
from services.reduction_service import reduction_service
from services.search_service import SearchConfig, search_service
from services.spectral_service import spectral_service
from services.states import TransformProblem
from services.verdict_service import verdict_service
from services.verdicts import Outcome
from utils.errors import (
    DimensionError,
    NormalizationError,
    ParseError,
    PreconditionError,
    VerifierError,
    ZeroComponentError,
    ZeroMatrixError,
)
from utils.log import configure_logging, get_logger

logger = get_logger("cli")

EXIT_INPUT_ERROR = 3
EXIT_INCONCLUSIVE = 2

INPUT_ERRORS = (
    OSError,
    ParseError,
    DimensionError,
    NormalizationError,
    ZeroComponentError,
    ZeroMatrixError,
    PreconditionError,
)

Report = Dict[str, Any]


def _report(args: argparse.Namespace, status: str, exit_code: int, **extra) -> Report:
    out: Report = {
        "command": args.command,
        "problem": getattr(args, "problem", None),
        "status": status,
        "exit_code": exit_code,
    }
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def _outcome_report(args: argparse.Namespace, outcome: Outcome, **extra) -> Report:
    return _report(args, outcome.value, outcome.exit_code, **extra)


def apply_overrides(args: argparse.Namespace) -> None:
    """Flags beat environment variables, which beat the YAML file."""
    load_config_from_yaml(args.config)
    settings.reload()
    overrides = {
        "abs_eps": args.tolerance,
        "rel_eps": args.rel_tolerance,
        "psd_eps": args.psd_tolerance,
        "max_iters": args.max_iters,
        "search_seed": args.seed,
        "search_restarts": args.restarts,
        "search_max_sweeps": args.max_sweeps,
        "log_level": args.log_level,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(settings, name, value)
    configure_logging(settings.log_level)


def _load(args: argparse.Namespace, tol: Tolerance) -> TransformProblem:
    problem = problem_service.load_problem_file(args.problem, normalize=args.normalize, tol=tol)
    return problem.with_bounds(args.max_p, args.max_q)


def _normalization_notes(problem: TransformProblem) -> List[str]:
    notes = []
    for i, pair in enumerate(problem.pairs, start=1):
        for label, state in (("input", pair.x), ("output", pair.y)):
            if state.normalization_factor != 1.0:
                notes.append(f"pair {i} {label} rescaled by 1/{state.normalization_factor:.12g}")
    return notes


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def handle_check(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    verdict = verdict_service.decide(problem, cfg, tol, run_search=not args.no_search)
    doc = verdict.to_dict()
    doc["warnings"] = _normalization_notes(problem) + doc.get("warnings", [])
    return _report(args, doc.pop("status"), verdict.exit_code, **{k: v for k, v in doc.items() if v != []})


def handle_pair(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    if not 1 <= args.pair_index <= problem.k:
        raise PreconditionError(f"--pair-index must be in 1..{problem.k}, got {args.pair_index}")
    pair = problem.pairs[args.pair_index - 1]
    verdict = verdict_service.decide_single_pair(pair.x, pair.y, tol)
    doc = verdict.to_dict()
    warnings = _normalization_notes(problem) + doc.get("warnings", [])
    return _report(
        args, doc["status"], verdict.exit_code,
        stage=doc.get("stage"), reason=doc["reason"], trace=doc["trace"],
        certificate=doc.get("certificate"), warnings=warnings or None,
    )


def handle_gram(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    xs = [s.amplitudes for s in problem.inputs]
    ys = [s.amplitudes for s in problem.outputs]
    check = gram_service.single_party_transformable(xs, ys, tol)
    data = {
        "G_X": problem_service.gram_matrix(xs, tol),
        "G_Y": problem_service.gram_matrix(ys, tol),
    }
    return _outcome_report(args, check.outcome, reason=check.to_dict(), data=data,
                           warnings=_normalization_notes(problem) or None)


def handle_svals(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    rows = []
    impossible = None
    for i, (X, Y) in enumerate(zip(problem.X_list, problem.Y_list), start=1):
        sx = spectral_service.singular_profile(X, tol, f"X_{i}").real
        sy = spectral_service.singular_profile(Y, tol, f"Y_{i}").real
        rank = spectral_service.rank_divisibility(X, Y, tol)
        row = {
            "pair": i,
            "rank_x": len(sx),
            "rank_y": len(sy),
            "ell": rank.witness.get("ell"),
            "x_values": sx.tolist(),
            "y_values": sy.tolist(),
            "peel": None,
            "gammas": [],
            "majorized": spectral_service.majorization(sx, sy, tol),
        }
        if rank.passed:
            witness = spectral_service.peel(sx, sy, tol)
            row["peel"] = witness.feasible
            row["gammas"] = [float(g) for g in witness.gammas]
            if not witness.feasible and impossible is None:
                impossible = {"condition": "peel", "message": f"pair {i}: peeling failed",
                              "witness": {"pair": i, **witness.to_dict()}}
        elif impossible is None:
            impossible = {"condition": "rank_divisibility", "message": f"pair {i}: {rank.message}",
                          "witness": {"pair": i, **rank.witness}}
        rows.append(row)

    outcome = Outcome.IMPOSSIBLE if impossible else Outcome.PASS
    return _outcome_report(args, outcome, reason=impossible, data={"pairs": rows},
                           warnings=_normalization_notes(problem) or None)


def handle_reduce(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    reduction = reduction_service.schmidt_reduce(problem, tol)
    check = reduction_service.necessary_condition_e(problem, tol, reduction=reduction)
    data = {
        "gammas": [[float(g) for g in gs] for gs in reduction.gammas],
        "mappings": len(reduction.subproblem) if reduction.subproblem is not None else 0,
    }
    warnings = _normalization_notes(problem) + list(reduction.warnings) + list(check.warnings)
    return _outcome_report(args, check.outcome, reason=check.to_dict(), data=data,
                           warnings=list(dict.fromkeys(warnings)) or None)


def handle_verify(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    cert = channel_service.load_certificate_file(args.certificate)
    report = channel_service.verify_certificate(cert, problem, tol)
    # A rejected certificate says nothing about whether another one exists
    status, code = ("pass", 0) if report.passed else ("fail", EXIT_INCONCLUSIVE)
    return _report(args, status, code, certificate=cert.to_dict(), data=report.to_dict())


def handle_search(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    problem = _load(args, tol)
    p_cap, q_cap = problem.search_bounds(settings.search_p_cap, settings.search_q_cap)
    p = args.p if args.p is not None else p_cap
    q = args.q if args.q is not None else q_cap
    outcome = search_service.search_certificate(problem, cfg.with_dims(p, q), tol)
    status = Outcome.CERTIFIED if outcome.found else Outcome.INCONCLUSIVE
    certificate = outcome.certificate.to_dict() if outcome.found else None
    data = outcome.to_dict()
    if outcome.report is not None:
        data["verification"] = outcome.report.to_dict()
    return _outcome_report(args, status, certificate=certificate, data=data)


def handle_examples(args: argparse.Namespace, tol: Tolerance, cfg: SearchConfig) -> Report:
    if args.list:
        return _report(args, "pass", 0, data={"fixtures": example_service.listing()})

    outcomes = example_service.run_examples(args.group, tol, cfg)
    failed = [o for o in outcomes if not o.matched]
    for o in failed:
        logger.warning(f"✗ {o.group}/{o.name}: expected {o.expected}, got {o.actual} ({o.detail})")
    status, code = ("fail", 1) if failed else ("pass", 0)
    summary = {"checks": len(outcomes), "matched": len(outcomes) - len(failed),
               "divergent": [f"{o.group}/{o.name}" for o in failed]}
    return _report(args, status, code, results=[o.to_dict() for o in outcomes], data=summary)


HANDLERS: Dict[str, Callable[[argparse.Namespace, Tolerance, SearchConfig], Report]] = {
    "check": handle_check,
    "pair": handle_pair,
    "gram": handle_gram,
    "svals": handle_svals,
    "reduce": handle_reduce,
    "verify": handle_verify,
    "search": handle_search,
    "examples": handle_examples,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and print its report on stdout.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:]).

    Returns:
        Exit code: 0 certified/pass, 1 impossible, 2 inconclusive, 3 input error.
    """
    configure_logging(settings.log_level)
    args = build_parser().parse_args(argv)
    try:
        apply_overrides(args)
        tol = settings.tolerance()
        cfg = SearchConfig()
        report = HANDLERS[args.command](args, tol, cfg)
        text = render(report, args.format)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except VerifierError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE

    print(text)
    return report["exit_code"]
