"""Schmidt reduction of a transformation problem to pooled single-party Gram problems."""

import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from infrastructure.linalg import Tolerance, svd
from services.gram_service import gram_service
from services.spectral_service import spectral_service
from services.states import TransformProblem
from services.verdicts import CheckResult, Outcome
from utils.errors import DegeneracyWarning, NumericalError
from utils.log import get_logger

logger = get_logger("reduction")

VectorPair = Tuple[np.ndarray, np.ndarray]


@dataclass
class SchmidtForm:
    """X = sum_v s_v a_v b_v^H with the largest-magnitude entry of each a_v real positive."""

    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.coefficients.size)

    def matrix(self) -> np.ndarray:
        return (self.left_vectors * self.coefficients) @ self.right_vectors.conj().T

    def has_repeated_values(self, tol: Tolerance) -> bool:
        s = self.coefficients
        return any(tol.matches(s[v], s[v + 1]) for v in range(s.size - 1))


@dataclass
class RankOneSubproblem:
    """
    Pooled rank-one mappings: left pairs a -> c in C^m, right pairs b -> d in C^n.

    ``provenance[t]`` is the 1-based (i, u, v) of the t-th pair and ``values[t]``
    the singular value gamma_iu * s_v(Y_i) it was matched to.
    """

    left_pairs: List[VectorPair] = field(default_factory=list)
    right_pairs: List[VectorPair] = field(default_factory=list)
    provenance: List[Tuple[int, int, int]] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.left_pairs)

    def for_pair(self, i: int) -> List[int]:
        """Positions belonging to pair i (1-based)."""
        return [t for t, (pi, _, _) in enumerate(self.provenance) if pi == i]


@dataclass
class ReductionResult:
    """Outcome of schmidt_reduce; ``check`` is Impossible or Pass."""

    check: CheckResult
    subproblem: Optional[RankOneSubproblem] = None
    forms: List[Tuple[SchmidtForm, SchmidtForm]] = field(default_factory=list)
    gammas: List[List[float]] = field(default_factory=list)
    degenerate: bool = False
    warnings: List[str] = field(default_factory=list)


class ReductionService:
    """Service for the Schmidt-decomposition pipeline."""

    def schmidt_form(self, X, tol: Tolerance) -> SchmidtForm:
        """Thin SVD under the phase convention."""
        A, s, B = svd(X, tol)
        A, B = A.copy(), B.copy()
        for v in range(s.size):
            idx = int(np.argmax(np.abs(A[:, v])))
            phase = A[idx, v] / abs(A[idx, v])
            A[:, v] *= np.conj(phase)
            B[:, v] *= np.conj(phase)
        return SchmidtForm(s, A, B)

    def match_triples(self, x_form: SchmidtForm, y_form: SchmidtForm, gammas: List[float],
               tol: Tolerance) -> List[Tuple[int, int, int]]:
        """Assign each X singular index to a (u, v) with value gamma_u * s_v(Y), stable order."""
        unused = list(range(x_form.rank))
        assignment = []
        for u, gamma in enumerate(gammas):
            for v, s_y in enumerate(y_form.coefficients):
                target = gamma * s_y
                matches = [t for t in unused if tol.matches(x_form.coefficients[t], target)]
                if not matches:
                    raise NumericalError(f"No singular value of X matches gamma*s = {target:.6g}")
                chosen = matches[0]
                unused.remove(chosen)
                assignment.append((chosen, u, v))
        return assignment

    def schmidt_reduce(self, problem: TransformProblem, tol: Tolerance) -> ReductionResult:
        """
        Derive the rank-one subproblems of every pair.

        Each pair must pass rank divisibility and peeling; X's singular triples
        are then grouped onto the values gamma_u * s_v(Y) and emitted as left
        pairs a -> c and right pairs b -> d, pooled over all pairs.
        """
        sub = RankOneSubproblem()
        result = ReductionResult(CheckResult("schmidt_reduce", Outcome.PASS), subproblem=sub)

        for i, (X, Y) in enumerate(zip(problem.X_list, problem.Y_list), start=1):
            ranks = spectral_service.rank_divisibility(X, Y, tol)
            if ranks.impossible:
                ranks.witness["pair"] = i
                ranks.message = f"pair {i}: {ranks.message}"
                return ReductionResult(ranks)

            x_form = self.schmidt_form(X, tol)
            y_form = self.schmidt_form(Y, tol)
            peel = spectral_service.peel(x_form.coefficients, y_form.coefficients, tol)
            if not peel.feasible:
                witness = {"pair": i, **peel.to_dict()}
                return ReductionResult(CheckResult(
                    "peel", Outcome.IMPOSSIBLE,
                    f"pair {i}: singular values of X are not a union of scaled copies of those of Y", witness,
                ))

            if x_form.has_repeated_values(tol) or y_form.has_repeated_values(tol):
                message = f"pair {i}: repeated singular values, Schmidt grouping is not unique"
                warnings.warn(message, DegeneracyWarning, stacklevel=2)
                logger.warning(f"⚠️  {message}")
                result.degenerate = True
                result.warnings.append(message)

            for t, u, v in self.match_triples(x_form, y_form, peel.gammas, tol):
                sub.left_pairs.append((x_form.left_vectors[:, t], y_form.left_vectors[:, v]))
                sub.right_pairs.append((x_form.right_vectors[:, t], y_form.right_vectors[:, v]))
                sub.provenance.append((i, u + 1, v + 1))
                sub.values.append(float(peel.gammas[u] * y_form.coefficients[v]))
            result.forms.append((x_form, y_form))
            result.gammas.append([float(g) for g in peel.gammas])

        result.check.message = f"{len(sub)} rank-one mappings from {problem.k} pairs"
        result.check.witness = {"gammas": result.gammas, "mappings": len(sub)}
        result.check.warnings = list(result.warnings)
        logger.info(f"✓ Schmidt reduction: {len(sub)} rank-one mappings")
        return result

    def reconstruct(self, reduction: ReductionResult, i: int) -> np.ndarray:
        """sum over pair i's mappings of value * a b^H; equals X_i up to round-off."""
        sub = reduction.subproblem
        terms = [sub.values[t] * np.outer(sub.left_pairs[t][0], sub.right_pairs[t][0].conj()) for t in sub.for_pair(i)]
        return sum(terms)

    def necessary_condition_e(self, problem: TransformProblem, tol: Tolerance,
                              reduction: Optional[ReductionResult] = None,
                              max_iters: Optional[int] = None) -> CheckResult:
        """
        Pooled left and right single-party Gram checks.

        Impossible if either side is Impossible; never Certified. With repeated
        singular values the result is capped at Inconclusive.
        """
        reduction = reduction or self.schmidt_reduce(problem, tol)
        if reduction.check.impossible:
            return reduction.check
        sub = reduction.subproblem

        sides: Dict[str, CheckResult] = {}
        for side, pairs in (("left", sub.left_pairs), ("right", sub.right_pairs)):
            sources = [a for a, _ in pairs]
            targets = [c for _, c in pairs]
            sides[side] = gram_service.single_party_transformable(
                sources, targets, tol, max_iters=max_iters, condition=f"{side}_gram"
            )

        witness = {side: check.to_dict() for side, check in sides.items()}
        impossible = [side for side, check in sides.items() if check.impossible]
        if impossible:
            side = impossible[0]
            if reduction.degenerate:
                return CheckResult(
                    "necessary_condition_e", Outcome.INCONCLUSIVE,
                    f"{side}-side Gram check failed for one degenerate Schmidt grouping; another may pass",
                    witness, warnings=list(reduction.warnings),
                )
            check = sides[side]
            return CheckResult(
                "necessary_condition_e", Outcome.IMPOSSIBLE,
                f"{side}-side Gram check: {check.message}",
                {"side": side, **check.witness}, value=sides,
            )
        if reduction.degenerate:
            return CheckResult(
                "necessary_condition_e", Outcome.INCONCLUSIVE,
                "Gram checks passed for one degenerate Schmidt grouping", witness,
                warnings=list(reduction.warnings),
            )
        if any(check.outcome is Outcome.INCONCLUSIVE for check in sides.values()):
            return CheckResult("necessary_condition_e", Outcome.INCONCLUSIVE,
                               "a pooled Gram completion was inconclusive", witness)
        return CheckResult("necessary_condition_e", Outcome.PASS, "left and right Gram checks feasible",
                           witness, value=sides)


# Global instance
reduction_service = ReductionService()
