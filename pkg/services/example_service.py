"""Fixture catalog loading and the reproduction gate."""

import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import yaml

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.exact import evaluate
from infrastructure.linalg import Tolerance
from services.channel_service import channel_service
from services.gram_service import gram_service
from services.problem_service import problem_service
from services.reduction_service import reduction_service
from services.search_service import SearchConfig, search_service
from services.spectral_service import spectral_service
from services.states import TransformProblem
from services.verdict_service import verdict_service
from utils.errors import ParseError, PreconditionError, VerifierError
from utils.log import get_logger

logger = get_logger("examples")

# Numeric expectations in the catalog are compared at this absolute tolerance
VALUE_ATOL = 1e-9
FIDELITY_FLOOR = 1 - 1e-8


@dataclass
class FixtureCheck:
    group: str
    name: str
    kind: str
    expect: str
    entry: Dict[str, Any] = field(default_factory=dict)


@dataclass
class FixtureGroup:
    name: str
    title: str
    checks: List[FixtureCheck] = field(default_factory=list)


@dataclass
class FixtureOutcome:
    """Result of one catalog check against its expectation."""

    group: str
    name: str
    kind: str
    expected: str
    actual: str
    matched: bool
    detail: str = ""
    elapsed: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group": self.group,
            "check": self.name,
            "kind": self.kind,
            "expected": self.expected,
            "actual": self.actual,
            "matched": self.matched,
            "detail": self.detail,
            "elapsed": round(self.elapsed, 6),
        }


def _values(raw) -> List[float]:
    return [evaluate(v) for v in raw]


def _close(actual, expected) -> bool:
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    return actual.shape == expected.shape and bool(np.allclose(actual, expected, rtol=0.0, atol=VALUE_ATOL))


class ExampleService:
    """Service for the built-in fixture catalog."""

    def __init__(self, catalog_path: Optional[Path] = None):
        """
        Initialize the example service.

        Args:
            catalog_path: YAML catalog. Defaults to settings.catalog_path;
                problem and certificate files resolve against its directory.
        """
        self._catalog_path = Path(catalog_path) if catalog_path else None
        self._groups: List[FixtureGroup] = []
        self._loaded = False

    @property
    def catalog_path(self) -> Path:
        return self._catalog_path or settings.catalog_path

    @property
    def fixtures_dir(self) -> Path:
        return self.catalog_path.parent

    def load(self) -> List[FixtureGroup]:
        """Load the catalog once and cache it."""
        if self._loaded:
            return self._groups

        path = self.catalog_path
        if not path.exists():
            raise ParseError(f"Fixture catalog not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                doc = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ParseError(f"Fixture catalog {path} is not valid YAML: {e}") from e
        if not doc or "groups" not in doc:
            raise ParseError(f"Fixture catalog {path} has no 'groups' section")

        groups = []
        for g in doc["groups"]:
            group = FixtureGroup(g["name"], g.get("title", ""))
            for c in g.get("checks", []):
                kind = c.get("kind")
                if kind not in self._runners():
                    raise ParseError(f"Unknown check kind {kind!r} in group {group.name}")
                group.checks.append(FixtureCheck(group.name, c.get("name", kind), kind, str(c["expect"]), c))
            groups.append(group)

        self._groups = groups
        self._loaded = True
        logger.info(f"✓ Loaded {sum(len(g.checks) for g in groups)} checks from {len(groups)} fixture groups")
        return groups

    def group_names(self) -> List[str]:
        return [g.name for g in self.load()]

    def get_group(self, name: str) -> FixtureGroup:
        for g in self.load():
            if g.name == name:
                return g
        raise PreconditionError(f"Unknown fixture group {name!r}; known: {', '.join(self.group_names())}")

    def listing(self) -> List[Dict[str, Any]]:
        """One row per check: group, title, check name, kind and expected outcome."""
        return [
            {"group": g.name, "title": g.title, "check": c.name, "kind": c.kind, "expected": c.expect}
            for g in self.load()
            for c in g.checks
        ]

    # ------------------------------------------------------------------
    # Running
    # ------------------------------------------------------------------

    def _problem(self, entry: Dict[str, Any], tol: Tolerance) -> TransformProblem:
        return problem_service.load_problem_file(self.fixtures_dir / entry["problem"], tol=tol)

    def _runners(self) -> Dict[str, Callable[[Dict[str, Any], Tolerance, SearchConfig], Tuple[str, bool, str]]]:
        return {
            "peel": self._run_peel,
            "decide": self._run_decide,
            "pair": self._run_pair,
            "gram": self._run_gram,
            "verify": self._run_verify,
            "kraus": self._run_kraus,
            "frame": self._run_frame,
            "search": self._run_search,
            "reduce": self._run_reduce,
            "cross": self._run_cross,
        }

    def _run_peel(self, entry, tol, cfg):
        witness = spectral_service.peel(_values(entry["alpha"]), _values(entry["beta"]), tol)
        actual = "pass" if witness.feasible else "impossible"
        ok = "gammas" not in entry or _close(witness.gammas, _values(entry["gammas"]))
        return actual, ok, f"gammas {np.round(witness.gammas, 9).tolist()}"

    def _run_decide(self, entry, tol, cfg):
        verdict = verdict_service.decide(self._problem(entry, tol), cfg, tol)
        ok = "stage" not in entry or verdict.stage == entry["stage"]
        ok = ok and ("condition" not in entry or verdict.condition == entry["condition"])
        return verdict.status.value, ok, f"stage {verdict.stage}: {verdict.condition}"

    def _run_pair(self, entry, tol, cfg):
        problem = self._problem(entry, tol)
        pair = problem.pairs[int(entry.get("pair", 1)) - 1]
        verdict = verdict_service.decide_single_pair(pair.x, pair.y, tol)
        ok = True
        detail = verdict.reason.get("message", "")
        if verdict.certificate is not None:
            svals = verdict.certificate.r_singular_values(0).real
            detail = f"R singular values {np.round(svals, 9).tolist()}"
            if "r_singular_values" in entry:
                ok = _close(svals, sorted(_values(entry["r_singular_values"]), reverse=True))
        return verdict.status.value, ok, detail

    def _run_gram(self, entry, tol, cfg):
        problem = self._problem(entry, tol)
        xs = [s.amplitudes for s in problem.inputs]
        ys = [s.amplitudes for s in problem.outputs]
        check = gram_service.single_party_transformable(xs, ys, tol)
        ok = True
        detail = check.message
        for key, states in (("input_overlap", xs), ("output_overlap", ys)):
            if key in entry:
                G = problem_service.gram_matrix(states, tol)
                overlap = complex(G[0, 1])
                ok = ok and _close([overlap.real, overlap.imag], [evaluate(entry[key]), 0.0])
                detail += f"; {key} {overlap.real:.12g}{overlap.imag:+.3g}j"
        return check.outcome.value, ok, detail

    def _run_verify(self, entry, tol, cfg):
        problem = self._problem(entry, tol)
        cert = channel_service.load_certificate_file(self.fixtures_dir / entry["certificate"])
        report = channel_service.verify_certificate(cert, problem, tol)
        ok = "max_residual" not in entry or report.max_residual <= float(entry["max_residual"])
        return ("pass" if report.passed else "fail"), ok, f"max residual {report.max_residual:.3g}"

    def _run_kraus(self, entry, tol, cfg):
        problem = self._problem(entry, tol)
        cert = channel_service.load_certificate_file(self.fixtures_dir / entry["certificate"])
        channel = channel_service.kraus_from_unitary(cert, tol)
        fidelities = [
            channel_service.fidelity(channel_service.apply_channel(channel, pair.x.density(), tol), pair.y)
            for pair in problem.pairs
        ]
        passed = all(f >= FIDELITY_FLOOR for f in fidelities)
        ok = "fidelities" not in entry or _close(fidelities, _values(entry["fidelities"]))
        return ("pass" if passed else "fail"), ok, f"min fidelity {min(fidelities):.12f}"

    def _run_frame(self, entry, tol, cfg):
        check = channel_service.frame_rigidity_check(self._problem(entry, tol), tol)
        ok = all(check.witness.get(key) == entry[key] for key in ("pinning_pair", "pair") if key in entry)
        return check.outcome.value, ok, check.message

    def _run_search(self, entry, tol, cfg):
        outcome = search_service.search_certificate(
            self._problem(entry, tol), cfg.with_dims(int(entry["p"]), int(entry["q"])), tol
        )
        actual = "certified" if outcome.found else "inconclusive"
        return actual, True, f"best residual {outcome.best_residual:.3e}"

    def _run_reduce(self, entry, tol, cfg):
        problem = self._problem(entry, tol)
        reduction = reduction_service.schmidt_reduce(problem, tol)
        check = reduction_service.necessary_condition_e(problem, tol, reduction=reduction)
        ok = True
        if "side" in entry:
            ok = check.witness.get("side") == entry["side"]
        if "gammas" in entry:
            expected = [_values(g) for g in entry["gammas"]]
            ok = ok and len(expected) == len(reduction.gammas) and all(
                _close(a, e) for a, e in zip(reduction.gammas, expected)
            )
        return check.outcome.value, ok, check.message

    def _run_cross(self, entry, tol, cfg):
        problem = self._problem(entry, tol)
        i, j = entry.get("pairs", [1, 2])
        check = spectral_service.cross_pair_test(
            problem.X_list[i - 1], problem.X_list[j - 1], problem.Y_list[i - 1], problem.Y_list[j - 1], tol,
            labels=(i, j),
        )
        ok = True
        if "x_eigenvalue_magnitudes" in entry:
            x_side = spectral_service.cross_eigenvalues(problem.X_list[i - 1], problem.X_list[j - 1], tol)
            mags = sorted((abs(z) for z in x_side["values"].values), reverse=True)
            ok = _close(mags, sorted(_values(entry["x_eigenvalue_magnitudes"]), reverse=True))
        return check.outcome.value, ok, check.message

    def run_check(self, check: FixtureCheck, tol: Optional[Tolerance] = None,
                  cfg: Optional[SearchConfig] = None) -> FixtureOutcome:
        tol = tol or settings.tolerance()
        cfg = cfg or SearchConfig()
        start = time.perf_counter()
        try:
            actual, extra_ok, detail = self._runners()[check.kind](check.entry, tol, cfg)
        except VerifierError as e:
            actual, extra_ok, detail = "error", False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - start
        matched = extra_ok and actual == check.expect
        mark = "✓" if matched else "✗"
        logger.info(f"{mark} {check.group}/{check.name}: expected {check.expect}, got {actual}")
        return FixtureOutcome(check.group, check.name, check.kind, check.expect, actual, matched, detail, elapsed)

    def run_examples(self, group: Optional[str] = None, tol: Optional[Tolerance] = None,
                     cfg: Optional[SearchConfig] = None) -> List[FixtureOutcome]:
        """Run every catalog check (or one group's) in catalog order."""
        groups = [self.get_group(group)] if group else self.load()
        return [self.run_check(c, tol, cfg) for g in groups for c in g.checks]


# Global instance
example_service = ExampleService()
