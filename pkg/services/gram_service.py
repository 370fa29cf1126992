"""Single-party transformability through correlation-matrix completion."""

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.json_codec import encode_complex, encode_matrix
from infrastructure.linalg import Tolerance, hermitian_part, min_eigenvalue, schur
from services.problem_service import problem_service
from services.verdicts import CheckResult, Outcome
from utils.errors import DimensionError
from utils.log import get_logger

logger = get_logger("gram")

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
INCONCLUSIVE = "inconclusive"


@dataclass
class CorrelationCompletion:
    """
    Partially forced correlation matrix and the result of completing it.

    ``forced`` maps (i, j), i < j, to M_ij = G_X[i, j] / G_Y[i, j]; ``free_pattern``
    lists the (i, j), i < j, where G_Y vanishes.
    """

    forced: Dict[Tuple[int, int], complex]
    free_pattern: List[Tuple[int, int]]
    status: str
    M: Optional[np.ndarray] = None
    min_eigenvalue: float = float("nan")
    residual: float = float("nan")
    iterations: int = 0
    certificate: Optional[Dict[str, Any]] = None
    history: List[float] = field(default_factory=list, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def _zero_threshold(tol: Tolerance) -> float:
    return 10 * tol.abs_eps


def _project_psd(A: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(hermitian_part(A))
    return (Q * np.clip(w, 0, None)) @ Q.conj().T


def _maximal_cliques(adjacency: Dict[int, Set[int]]) -> List[List[int]]:
    """Bron-Kerbosch with pivoting; cliques sorted for determinism."""
    cliques: List[List[int]] = []

    def expand(r: Set[int], p: Set[int], x: Set[int]):
        if not p and not x:
            cliques.append(sorted(r))
            return
        pivot = max(p | x, key=lambda u: (len(adjacency[u] & p), -u))
        for v in sorted(p - adjacency[pivot]):
            expand(r | {v}, p & adjacency[v], x & adjacency[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(adjacency), set())
    return sorted(cliques, key=lambda c: (-len(c), c))


class GramService:
    """Service for the single-party correlation-matrix criterion."""

    def __init__(self, max_iters: Optional[int] = None):
        self._max_iters = max_iters

    @property
    def max_iters(self) -> int:
        return self._max_iters or settings.max_iters

    @staticmethod
    def _check_pair(G_X, G_Y) -> Tuple[np.ndarray, np.ndarray]:
        G_X = np.asarray(G_X, dtype=complex)
        G_Y = np.asarray(G_Y, dtype=complex)
        if G_X.ndim != 2 or G_X.shape[0] != G_X.shape[1] or G_X.shape != G_Y.shape:
            raise DimensionError(f"Gram matrices must be equal-sized and square, got {G_X.shape} and {G_Y.shape}")
        return G_X, G_Y

    def zero_pattern_check(self, G_X, G_Y, tol: Tolerance) -> CheckResult:
        """Impossible when some G_Y entry vanishes while the matching G_X entry does not."""
        G_X, G_Y = self._check_pair(G_X, G_Y)
        zero = _zero_threshold(tol)
        k = G_X.shape[0]
        for i in range(k):
            for j in range(i + 1, k):
                if abs(G_Y[i, j]) <= zero and abs(G_X[i, j]) > zero:
                    witness = {
                        "entry": [i + 1, j + 1],
                        "g_x": encode_complex(G_X[i, j]),
                        "g_y": encode_complex(G_Y[i, j]),
                    }
                    return CheckResult(
                        "zero_pattern", Outcome.IMPOSSIBLE,
                        f"G_Y[{i + 1},{j + 1}] = 0 but |G_X[{i + 1},{j + 1}]| = {abs(G_X[i, j]):.6g}", witness,
                    )
        return CheckResult("zero_pattern", Outcome.PASS, "every zero of G_Y is a zero of G_X")

    def forced_pattern(self, G_X, G_Y, tol: Tolerance) -> Tuple[Dict[Tuple[int, int], complex], List[Tuple[int, int]]]:
        G_X, G_Y = self._check_pair(G_X, G_Y)
        zero = _zero_threshold(tol)
        forced, free = {}, []
        k = G_X.shape[0]
        for i in range(k):
            for j in range(i + 1, k):
                if abs(G_Y[i, j]) > zero:
                    forced[(i, j)] = complex(G_X[i, j] / G_Y[i, j])
                else:
                    free.append((i, j))
        return forced, free

    def complete_correlation(self, G_X, G_Y, tol: Tolerance, max_iters: Optional[int] = None) -> CorrelationCompletion:
        """
        Find a correlation matrix M with G_X = M o G_Y.

        Forced entries are G_X/G_Y where G_Y is nonzero; free entries start at 0
        and are filled by Dykstra's alternating projections between the PSD
        cone and the affine set of matrices with the forced entries and a unit
        diagonal.

        Returns:
            CorrelationCompletion with status feasible, infeasible (only with a
            forced principal submatrix that is not PSD) or inconclusive.
        """
        G_X, G_Y = self._check_pair(G_X, G_Y)
        max_iters = max_iters or self.max_iters
        forced, free = self.forced_pattern(G_X, G_Y, tol)
        k = G_X.shape[0]

        mask = np.eye(k, dtype=bool)
        target = np.eye(k, dtype=complex)
        for (i, j), value in forced.items():
            mask[i, j] = mask[j, i] = True
            target[i, j] = value
            target[j, i] = np.conj(value)

        def project_affine(A: np.ndarray) -> np.ndarray:
            out = hermitian_part(A)
            out[mask] = target[mask]
            return out

        if not free:
            M = target.copy()
            return self._finish(G_X, G_Y, M, forced, free, tol, iterations=0, stalled=True, history=[])

        Y = target.copy()
        increment = np.zeros_like(Y)
        history: List[float] = []
        iterations = 0
        for iterations in range(1, max_iters + 1):
            R = Y - increment
            P = _project_psd(R)
            increment = P - R
            Y = project_affine(P)
            history.append(float(np.linalg.norm(Y - P)))
            if min_eigenvalue(Y) >= -tol.psd_eps:
                break

        window = history[-max(1, len(history) // 10):]
        stalled = iterations >= max_iters and min(window) > tol.psd_eps
        return self._finish(G_X, G_Y, Y, forced, free, tol, iterations=iterations, stalled=stalled, history=history)

    def _finish(self, G_X, G_Y, M, forced, free, tol: Tolerance, iterations: int, stalled: bool,
                history: List[float]) -> CorrelationCompletion:
        M = hermitian_part(M)
        np.fill_diagonal(M, 1.0)
        lam = min_eigenvalue(M)
        residual = float(np.max(np.abs(G_X - schur(M, G_Y))))
        result = CorrelationCompletion(forced, free, INCONCLUSIVE, M=M, min_eigenvalue=lam, residual=residual,
                                       iterations=iterations, history=history)
        if lam >= -tol.psd_eps and residual <= 10 * tol.abs_eps:
            result.status = FEASIBLE
            logger.debug(f"✓ completion feasible after {iterations} iterations (lambda_min={lam:.3g})")
            return result

        if stalled:
            certificate = self.forced_submatrix_certificate(M, forced, tol)
            if certificate is not None:
                result.status = INFEASIBLE
                result.certificate = certificate
                logger.debug(f"✗ completion infeasible: forced block {certificate['indices']} not PSD")
                return result
        logger.debug(f"⚠️  completion inconclusive after {iterations} iterations (lambda_min={lam:.3g})")
        return result

    def forced_submatrix_certificate(self, M, forced: Dict[Tuple[int, int], complex],
                                     tol: Tolerance) -> Optional[Dict[str, Any]]:
        """Maximal all-forced principal submatrix with a negative eigenvalue, if any."""
        k = M.shape[0]
        adjacency: Dict[int, Set[int]] = {i: set() for i in range(k)}
        for i, j in forced:
            adjacency[i].add(j)
            adjacency[j].add(i)
        for clique in _maximal_cliques(adjacency):
            sub = M[np.ix_(clique, clique)]
            lam = min_eigenvalue(sub)
            if lam < -tol.psd_eps:
                return {
                    "indices": [i + 1 for i in clique],
                    "submatrix": encode_matrix(sub),
                    "min_eigenvalue": lam,
                }
        return None

    # ------------------------------------------------------------------
    # Constructive side
    # ------------------------------------------------------------------

    def correlation_factor(self, M, tol: Tolerance) -> np.ndarray:
        """
        Unit vectors xi_i (columns) with <xi_i|xi_j> = M_ij.

        Returns:
            r x k matrix Z with Z^H Z = M, r the numerical rank of M.
        """
        w, Q = np.linalg.eigh(hermitian_part(M))
        keep = w > tol.psd_eps
        Z = (Q[:, keep] * np.sqrt(w[keep])).conj().T
        norms = np.linalg.norm(Z, axis=0)
        return Z / np.where(norms > 0, norms, 1.0)

    def single_party_isometry(self, xs: Sequence, ys: Sequence, M, tol: Tolerance) -> Tuple[np.ndarray, float]:
        """
        Map W with W x_i = xi_i (x) y_i, built as W = T X^+.

        Returns:
            (W, residual) with residual = ||W X - T||_F.
        """
        X = np.column_stack([np.asarray(getattr(x, "amplitudes", x), dtype=complex).reshape(-1) for x in xs])
        Yv = [np.asarray(getattr(y, "amplitudes", y), dtype=complex).reshape(-1) for y in ys]
        Z = self.correlation_factor(M, tol)
        T = np.column_stack([np.kron(Z[:, i], Yv[i]) for i in range(len(Yv))])
        W = T @ np.linalg.pinv(X)
        return W, float(np.linalg.norm(W @ X - T))

    def single_party_transformable(self, xs: Sequence, ys: Sequence, tol: Tolerance,
                                   max_iters: Optional[int] = None, condition: str = "single_party") -> CheckResult:
        """
        Decide whether one channel maps every x_i to y_i.

        Certified when a correlation matrix M with G_X = M o G_Y exists (the
        criterion is necessary and sufficient); Impossible on a zero-pattern
        violation or a certified infeasible completion; otherwise Inconclusive.
        """
        if len(xs) != len(ys):
            raise DimensionError(f"{len(xs)} inputs but {len(ys)} outputs")
        G_X = problem_service.gram_matrix(xs, tol)
        G_Y = problem_service.gram_matrix(ys, tol)

        zero = self.zero_pattern_check(G_X, G_Y, tol)
        if zero.impossible:
            zero.condition = condition
            zero.witness["check"] = "zero_pattern"
            return zero

        completion = self.complete_correlation(G_X, G_Y, tol, max_iters)
        witness: Dict[str, Any] = {
            "forced_entries": len(completion.forced),
            "free_entries": len(completion.free_pattern),
            "iterations": completion.iterations,
            "min_eigenvalue": completion.min_eigenvalue,
            "residual": completion.residual,
        }
        if completion.feasible:
            W, iso_residual = self.single_party_isometry(xs, ys, completion.M, tol)
            witness["M"] = encode_matrix(completion.M)
            witness["isometry_residual"] = iso_residual
            return CheckResult(condition, Outcome.CERTIFIED, "correlation matrix M with G_X = M o G_Y found",
                               witness, value=completion)
        if completion.status == INFEASIBLE:
            witness["check"] = "forced_submatrix"
            witness.update(completion.certificate)
            return CheckResult(condition, Outcome.IMPOSSIBLE,
                               f"forced principal submatrix on {completion.certificate['indices']} is not PSD",
                               witness, value=completion)
        return CheckResult(condition, Outcome.INCONCLUSIVE, "completion did not converge to a certified answer",
                           witness, value=completion)


# Global instance
gram_service = GramService()
