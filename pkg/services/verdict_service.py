"""Decision pipeline: necessary conditions cheapest-first, then certification."""

import sys
import time
import warnings
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.linalg import Tolerance, orthonormal_complement
from services.channel_service import UnitaryCertificate, channel_service
from services.reduction_service import reduction_service
from services.search_service import SearchConfig, search_service
from services.spectral_service import spectral_service
from services.states import BipartiteState, StatePair, TransformProblem
from services.verdicts import CheckResult, Outcome, Status, TraceEntry, Verdict
from utils.errors import DegeneracyWarning, DimensionError, PreconditionError, VerifierError
from utils.log import get_logger

logger = get_logger("verdict")

STAGE_SPECTRAL = 1
STAGE_CROSS_PAIR = 2
STAGE_GRAM = 3
STAGE_FRAME = 4
STAGE_SEARCH = 5


def _reason(check: CheckResult) -> Dict[str, Any]:
    return check.to_dict()


def _pair_label(check: CheckResult, i: int) -> CheckResult:
    check.witness.setdefault("pair", i)
    if not check.message.startswith("pair"):
        check.message = f"pair {i}: {check.message}"
    return check


class _Trace:
    """Runs checks, times them and turns library errors into inconclusive entries."""

    def __init__(self):
        self.entries: List[TraceEntry] = []
        self.warnings: List[str] = []

    def run(self, stage: int, name: str, fn: Callable[[], CheckResult]) -> Optional[CheckResult]:
        start = time.perf_counter()
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegeneracyWarning)
                check = fn()
            for w in caught:
                if issubclass(w.category, DegeneracyWarning):
                    self.warnings.append(str(w.message))
                else:
                    warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
        except VerifierError as e:
            elapsed = time.perf_counter() - start
            logger.warning(f"⚠️  {name}: {type(e).__name__}: {e}")
            self.entries.append(TraceEntry(stage, name, Outcome.INCONCLUSIVE, elapsed, f"{type(e).__name__}: {e}"))
            return None
        elapsed = time.perf_counter() - start
        self.entries.append(TraceEntry(stage, name, check.outcome, elapsed, check.message))
        self.warnings.extend(w for w in check.warnings if w not in self.warnings)
        return check

    def skip(self, stage: int, name: str, detail: str) -> None:
        self.entries.append(TraceEntry(stage, name, Outcome.SKIPPED, 0.0, detail))


class VerdictService:
    """Service that aggregates every check into a Verdict."""

    # ------------------------------------------------------------------
    # Single pair
    # ------------------------------------------------------------------

    def single_pair_certificate(self, X, Y, tol: Tolerance) -> Tuple[CheckResult, Optional[UnitaryCertificate]]:
        """
        Peel test for one pair and, when feasible, the certificate it implies.

        R = diag(gamma) with p = q = ell; U sends e_1 (x) a_t to e_u (x) c_v and
        V^H sends e_1 (x) b_t to e_u (x) d_v for each matched singular triple.
        """
        ranks = spectral_service.rank_divisibility(X, Y, tol)
        if ranks.impossible:
            return ranks, None
        x_form = reduction_service.schmidt_form(X, tol)
        y_form = reduction_service.schmidt_form(Y, tol)
        peel = spectral_service.peel(x_form.coefficients, y_form.coefficients, tol)
        if not peel.feasible:
            return CheckResult("peel", Outcome.IMPOSSIBLE,
                               f"no gamma peeling of the Schmidt coefficients (failed at step {peel.failure_step})",
                               peel.to_dict(), value=peel), None

        ell = peel.ell
        e = np.eye(ell)
        src_a, dst_c, src_b, dst_d = [], [], [], []
        for t, u, v in reduction_service.match_triples(x_form, y_form, peel.gammas, tol):
            src_a.append(np.kron(e[0], x_form.left_vectors[:, t]))
            dst_c.append(np.kron(e[u], y_form.left_vectors[:, v]))
            src_b.append(np.kron(e[0], x_form.right_vectors[:, t]))
            dst_d.append(np.kron(e[u], y_form.right_vectors[:, v]))
        Sa, Dc = np.column_stack(src_a), np.column_stack(dst_c)
        Sb, Dd = np.column_stack(src_b), np.column_stack(dst_d)
        U = Dc @ Sa.conj().T + orthonormal_complement(Dc) @ orthonormal_complement(Sa).conj().T
        V = Sb @ Dd.conj().T + orthonormal_complement(Sb) @ orthonormal_complement(Dd).conj().T
        R = np.diag(np.asarray(peel.gammas, dtype=complex))
        cert = UnitaryCertificate(U, V, [R], ell, ell)
        check = CheckResult("peel", Outcome.PASS, f"gammas {np.round(peel.gammas, 12).tolist()}",
                            peel.to_dict(), value=peel)
        return check, cert

    def decide_single_pair(self, x: BipartiteState, y: BipartiteState, tol: Optional[Tolerance] = None) -> Verdict:
        """Complete decision for one pair: feasible peel gives a certificate, otherwise Impossible."""
        tol = tol or settings.tolerance()
        if (x.m, x.n) != (y.m, y.n):
            raise DimensionError(f"Input is {x.m}x{x.n} but output is {y.m}x{y.n}")
        problem = TransformProblem((StatePair(x, y),))
        trace = _Trace()
        holder: Dict[str, Any] = {}

        def run() -> CheckResult:
            check, cert = self.single_pair_certificate(x.matrix, y.matrix, tol)
            holder["cert"] = cert
            return check

        check = trace.run(STAGE_SPECTRAL, "single_pair", run)
        if check is None:
            return Verdict(Status.INCONCLUSIVE, {"condition": "single_pair", "message": trace.entries[-1].detail},
                           trace.entries, warnings=trace.warnings, stage=STAGE_SPECTRAL)
        if check.impossible:
            return Verdict(Status.IMPOSSIBLE, _reason(check), trace.entries, warnings=trace.warnings,
                           stage=STAGE_SPECTRAL)

        cert = holder["cert"]
        verified = trace.run(STAGE_SPECTRAL, "verify_certificate", lambda: self._verify(cert, problem, tol))
        if verified is not None and verified.passed:
            reason = {"condition": "single_pair", "message": check.message, "p": cert.p, "q": cert.q,
                      "r_singular_values": cert.r_singular_values(0).real.tolist()}
            return Verdict(Status.CERTIFIED, reason, trace.entries, cert, trace.warnings, STAGE_SPECTRAL)
        return Verdict(Status.INCONCLUSIVE,
                       {"condition": "single_pair", "message": "peel feasible but the constructed certificate did not verify"},
                       trace.entries, warnings=trace.warnings, stage=STAGE_SPECTRAL)

    @staticmethod
    def _verify(cert: UnitaryCertificate, problem: TransformProblem, tol: Tolerance) -> CheckResult:
        report = channel_service.verify_certificate(cert, problem, tol)
        outcome = Outcome.CERTIFIED if report.passed else Outcome.INCONCLUSIVE
        return CheckResult("verify_certificate", outcome, f"max residual {report.max_residual:.3g}",
                           report.to_dict(), value=report)

    # ------------------------------------------------------------------
    # Pipeline
    # ------------------------------------------------------------------

    @staticmethod
    def search_range(problem: TransformProblem, ells: List[int]) -> Tuple[int, int]:
        need = max(ells) if ells else 1
        return problem.search_bounds(max(settings.search_p_cap, need), max(settings.search_q_cap, need))

    def search_dimensions(self, problem: TransformProblem, ells: List[int], skip_no_ancilla: bool) -> List[Tuple[int, int]]:
        """
        (p, q) within the bounds ordered by (p*q, p); R_i needs rank ell_i <= min(p, q).

        An unbounded ancilla is searched up to the settings cap, raised to the
        largest ell so that every pair still fits.
        """
        need = max(ells) if ells else 1
        p_hi, q_hi = self.search_range(problem, ells)
        dims = [
            (p, q)
            for p in range(1, p_hi + 1)
            for q in range(1, q_hi + 1)
            if min(p, q) >= need and not (skip_no_ancilla and (p, q) == (1, 1))
        ]
        return sorted(dims, key=lambda d: (d[0] * d[1], d[0]))

    def decide(self, problem: TransformProblem, cfg: Optional[SearchConfig] = None,
               tol: Optional[Tolerance] = None, run_search: bool = True,
               max_iters: Optional[int] = None) -> Verdict:
        """
        Run the pipeline and stop at the first Impossible.

        Stages: (1) rank divisibility, peel and the ancilla-rank bound per pair;
        (2) cross-pair eigenvalues for i < j; (3) Schmidt reduction with the
        pooled Gram checks; (4) no-ancilla frame rigidity; (5) certificate
        search over (p, q) up to the problem's bounds.
        """
        tol = tol or settings.tolerance()
        cfg = cfg or SearchConfig()
        if problem.k == 1:
            return self._decide_one(problem, tol)

        trace = _Trace()

        def impossible(check: CheckResult, stage: int) -> Verdict:
            logger.info(f"✗ Impossible at stage {stage} ({check.condition}): {check.message}")
            return Verdict(Status.IMPOSSIBLE, _reason(check), trace.entries, warnings=trace.warnings, stage=stage)

        # Stage 1
        ells: List[int] = []
        for i, (X, Y) in enumerate(zip(problem.X_list, problem.Y_list), start=1):
            ranks = trace.run(STAGE_SPECTRAL, f"rank_divisibility[{i}]",
                              lambda X=X, Y=Y, i=i: _pair_label(spectral_service.rank_divisibility(X, Y, tol), i))
            if ranks is None:
                continue
            if ranks.impossible:
                return impossible(ranks, STAGE_SPECTRAL)
            peel = trace.run(STAGE_SPECTRAL, f"peel[{i}]", lambda X=X, Y=Y, i=i: self._peel_check(X, Y, tol, i))
            if peel is not None and peel.impossible:
                return impossible(peel, STAGE_SPECTRAL)
            ell = ranks.value
            ells.append(ell)
            bound = trace.run(STAGE_SPECTRAL, f"ancilla_bound[{i}]",
                              lambda ell=ell, i=i: _pair_label(
                                  spectral_service.ancilla_bound(ell, problem.p_max, problem.q_max), i))
            if bound is not None and bound.impossible:
                return impossible(bound, STAGE_SPECTRAL)

        # Stage 2
        for i in range(problem.k):
            for j in range(i + 1, problem.k):
                check = trace.run(
                    STAGE_CROSS_PAIR, f"cross_pair[{i + 1},{j + 1}]",
                    lambda i=i, j=j: spectral_service.cross_pair_test(
                        problem.X_list[i], problem.X_list[j], problem.Y_list[i], problem.Y_list[j], tol,
                        labels=(i + 1, j + 1),
                    ),
                )
                if check is not None and check.impossible:
                    return impossible(check, STAGE_CROSS_PAIR)

        # Stage 3
        check = trace.run(STAGE_GRAM, "necessary_condition_e",
                          lambda: reduction_service.necessary_condition_e(problem, tol, max_iters=max_iters))
        if check is not None and check.impossible:
            return impossible(check, STAGE_GRAM)

        # Stage 4
        frame = trace.run(STAGE_FRAME, "frame_rigidity", lambda: channel_service.frame_rigidity_check(problem, tol))
        no_ancilla_ruled_out = False
        if frame is not None:
            if frame.outcome is Outcome.CERTIFIED:
                logger.info("✓ Certified without ancillas by frame rigidity")
                return Verdict(Status.CERTIFIED, _reason(frame), trace.entries, frame.value, trace.warnings,
                               STAGE_FRAME)
            if frame.impossible:
                if problem.p_max == 1 and problem.q_max == 1:
                    return impossible(frame, STAGE_FRAME)
                no_ancilla_ruled_out = True

        # Stage 5
        attempts: List[Dict[str, Any]] = []
        if not run_search:
            trace.skip(STAGE_SEARCH, "search", "search disabled")
        else:
            dims = self.search_dimensions(problem, ells, no_ancilla_ruled_out)
            if not dims:
                trace.skip(STAGE_SEARCH, "search", "no ancilla dimensions left within the bounds")
            for p, q in dims:
                holder: Dict[str, Any] = {}

                def run(p=p, q=q, holder=holder) -> CheckResult:
                    outcome = search_service.search_certificate(problem, cfg.with_dims(p, q), tol)
                    holder["outcome"] = outcome
                    status = Outcome.CERTIFIED if outcome.found else Outcome.INCONCLUSIVE
                    message = (f"certificate found (restart {outcome.best_restart})" if outcome.found
                               else f"best residual {outcome.best_residual:.3e}")
                    return CheckResult("search", status, message, outcome.to_dict(), value=outcome)

                check = trace.run(STAGE_SEARCH, f"search[p={p},q={q}]", run)
                if check is None:
                    continue
                attempts.append(check.witness)
                if check.outcome is Outcome.CERTIFIED:
                    outcome = holder["outcome"]
                    reason = {"condition": "search", "message": check.message, "p": p, "q": q,
                              "max_residual": outcome.report.max_residual}
                    return Verdict(Status.CERTIFIED, reason, trace.entries, outcome.certificate, trace.warnings,
                                   STAGE_SEARCH)

        reason: Dict[str, Any] = {
            "condition": "pipeline",
            "message": "no necessary condition failed and no certificate was found",
        }
        if attempts:
            reason["search"] = attempts
        if no_ancilla_ruled_out:
            reason["frame_rigidity"] = frame.to_dict()
        if run_search and not problem.bounded:
            p_hi, q_hi = self.search_range(problem, ells)
            reason["search_range"] = {"p_max": p_hi, "q_max": q_hi,
                                      "message": "no ancilla bound given; the search stopped at these dimensions"}
        logger.info("Inconclusive: all necessary conditions passed")
        return Verdict(Status.INCONCLUSIVE, reason, trace.entries, warnings=trace.warnings)

    def _peel_check(self, X, Y, tol: Tolerance, i: int) -> CheckResult:
        peel = spectral_service.peel(
            spectral_service.singular_profile(X, tol), spectral_service.singular_profile(Y, tol), tol
        )
        if not peel.feasible:
            return CheckResult("peel", Outcome.IMPOSSIBLE,
                               f"pair {i}: singular values of X are not a union of scaled copies of those of Y",
                               {"pair": i, **peel.to_dict()}, value=peel)
        return CheckResult("peel", Outcome.PASS, f"pair {i}: ell = {peel.ell}", {"pair": i, **peel.to_dict()},
                           value=peel)

    def _decide_one(self, problem: TransformProblem, tol: Tolerance) -> Verdict:
        pair = problem.pairs[0]
        verdict = self.decide_single_pair(pair.x, pair.y, tol)
        if verdict.status is not Status.CERTIFIED:
            return verdict
        ell = verdict.certificate.p
        bound = spectral_service.ancilla_bound(ell, problem.p_max, problem.q_max)
        verdict.trace.append(TraceEntry(STAGE_SPECTRAL, "ancilla_bound[1]", bound.outcome, 0.0, bound.message))
        if bound.impossible:
            bound.witness["pair"] = 1
            return Verdict(Status.IMPOSSIBLE, _reason(bound), verdict.trace, warnings=verdict.warnings,
                           stage=STAGE_SPECTRAL)
        return verdict

    # ------------------------------------------------------------------
    # Witness replay
    # ------------------------------------------------------------------

    def replay(self, problem: TransformProblem, verdict: Verdict, tol: Optional[Tolerance] = None) -> CheckResult:
        """
        Re-run the check an Impossible verdict names, on the problem alone.

        Returns:
            The re-run CheckResult; it is Impossible when the witness holds.

        Raises:
            PreconditionError: the verdict is not Impossible or names an unknown check.
        """
        tol = tol or settings.tolerance()
        if verdict.status is not Status.IMPOSSIBLE:
            raise PreconditionError(f"Only Impossible verdicts carry a witness, got {verdict.status.value}")
        condition = verdict.condition
        witness = verdict.reason.get("witness", {})

        if condition in ("rank_divisibility", "peel", "ancilla_bound"):
            i = int(witness.get("pair", 1))
            X, Y = problem.X_list[i - 1], problem.Y_list[i - 1]
            if condition == "rank_divisibility":
                return spectral_service.rank_divisibility(X, Y, tol)
            if condition == "peel":
                return self._peel_check(X, Y, tol, i)
            return spectral_service.ancilla_bound(int(witness["ell"]), problem.p_max, problem.q_max)
        if condition == "cross_pair":
            i, j = witness["pair"]
            return spectral_service.cross_pair_test(
                problem.X_list[i - 1], problem.X_list[j - 1], problem.Y_list[i - 1], problem.Y_list[j - 1], tol,
                labels=(i, j),
            )
        if condition == "necessary_condition_e":
            return reduction_service.necessary_condition_e(problem, tol)
        if condition == "frame_rigidity":
            return channel_service.frame_rigidity_check(problem, tol)
        raise PreconditionError(f"No replay for condition {condition!r}")


# Global instance
verdict_service = VerdictService()
