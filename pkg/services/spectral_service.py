"""Spectrum-based necessary conditions: rank divisibility, peeling and the cross-pair eigenvalue test."""

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.json_codec import encode_complex
from infrastructure.linalg import Tolerance, eigvals, frobenius, svd
from services.verdicts import CheckResult, Outcome
from utils.errors import PreconditionError, SizeLimitError, ZeroMatrixError
from utils.log import get_logger

logger = get_logger("spectral")


def _sort_key(z: complex):
    return (-abs(z), float(np.angle(z)))


@dataclass
class SpectralProfile:
    """Multiset of singular values or eigenvalues, sorted by (magnitude desc, phase asc)."""

    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise PreconditionError(f"Spectral profile {self.source!r} has non-finite values")
        self.values = np.array(sorted(vals, key=_sort_key), dtype=complex)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def real(self) -> np.ndarray:
        return self.values.real.copy()

    def to_list(self) -> List[Any]:
        if np.all(np.abs(self.values.imag) == 0):
            return [float(v) for v in self.values.real]
        return [encode_complex(v) for v in self.values]


@dataclass
class RatioWitness:
    """
    Outcome of the peeling algorithm.

    ``gammas`` are the scale factors found so far (all of them when feasible).
    ``failure_step`` is 0 when the size ratio is not an integer, otherwise the
    1-based step whose scaled copy of beta was not found in what was left.
    """

    gammas: List[float]
    feasible: bool
    failure_step: Optional[int] = None
    steps: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def ell(self) -> int:
        return len(self.gammas)

    def reconstruct(self, beta: Sequence[float]) -> List[float]:
        """The multiset {gamma_u * beta_v}, descending."""
        return sorted((g * b for g in self.gammas for b in beta), reverse=True)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"feasible": self.feasible, "gammas": [float(g) for g in self.gammas]}
        if self.failure_step is not None:
            out["failure_step"] = self.failure_step
        return out


def _as_values(profile: Union[SpectralProfile, Sequence[complex]]) -> np.ndarray:
    if isinstance(profile, SpectralProfile):
        return profile.values
    return SpectralProfile(profile).values


def _take_match(remaining: List[complex], target: complex, tol: Tolerance) -> Optional[int]:
    """Index of the closest tolerance-matched element, or None."""
    best, best_err = None, None
    for idx, value in enumerate(remaining):
        if tol.matches(value, target):
            err = abs(value - target)
            if best_err is None or err < best_err:
                best, best_err = idx, err
    return best


def _sub_multiset(block: Sequence[complex], remaining: List[complex], tol: Tolerance) -> Optional[List[complex]]:
    """Remaining multiset with ``block`` removed, or None if some element is missing."""
    left = list(remaining)
    for target in block:
        idx = _take_match(left, target, tol)
        if idx is None:
            return None
        left.pop(idx)
    return left


class SpectralService:
    """Service for the spectral necessary conditions."""

    def __init__(self, partition_cap: Optional[int] = None):
        self._partition_cap = partition_cap

    @property
    def partition_cap(self) -> int:
        return self._partition_cap or settings.partition_cap

    def singular_profile(self, X, tol: Tolerance, source: str = "") -> SpectralProfile:
        return SpectralProfile(svd(X, tol)[1], source)

    def peel(self, alpha, beta, tol: Tolerance) -> RatioWitness:
        """
        Decide whether alpha is the union of scaled copies gamma_u * beta.

        Each step takes gamma = max(A)/beta_1 and removes {beta_j * gamma}
        from what is left of alpha.

        Args:
            alpha: Positive values (singular values of X).
            beta: Positive values (singular values of Y).
            tol: Tolerance for multiset membership.

        Returns:
            RatioWitness with the gamma list or the failing step.
        """
        A = [float(v.real) for v in _as_values(alpha)]
        B = [float(v.real) for v in _as_values(beta)]
        if not A or not B:
            raise PreconditionError("peel needs two non-empty profiles")
        if min(A) <= 0 or min(B) <= 0:
            raise PreconditionError("peel needs strictly positive values")

        if len(A) % len(B) != 0:
            logger.debug(f"✗ peel: |alpha|={len(A)} is not a multiple of |beta|={len(B)}")
            return RatioWitness([], False, failure_step=0)

        r = len(A) // len(B)
        remaining = sorted(A, reverse=True)
        gammas: List[float] = []
        steps: List[Dict[str, Any]] = []
        for step in range(1, r + 1):
            gamma = remaining[0] / B[0]
            block = [b * gamma for b in B]
            left = _sub_multiset(block, remaining, tol)
            steps.append({"step": step, "gamma": gamma, "block": block, "found": left is not None})
            if left is None:
                logger.debug(f"✗ peel failed at step {step}: {block} not contained in {remaining}")
                return RatioWitness(gammas, False, failure_step=step, steps=steps)
            gammas.append(gamma)
            remaining = left
        return RatioWitness(gammas, True, steps=steps)

    def rank_divisibility(self, X, Y, tol: Tolerance) -> CheckResult:
        """
        rank(X) must be a multiple of rank(Y); the quotient is ell.

        Raises:
            ZeroMatrixError: Y is numerically zero.
        """
        if frobenius(Y) <= tol.abs_eps:
            raise ZeroMatrixError("Output matrix is numerically zero")
        rank_x = svd(X, tol)[1].size
        rank_y = svd(Y, tol)[1].size
        if rank_y == 0:
            raise ZeroMatrixError("Output matrix has numerical rank 0")
        witness = {"rank_x": rank_x, "rank_y": rank_y}
        if rank_x == 0 or rank_x % rank_y != 0:
            return CheckResult(
                "rank_divisibility", Outcome.IMPOSSIBLE,
                f"rank(X)={rank_x} is not a positive multiple of rank(Y)={rank_y}", witness,
            )
        ell = rank_x // rank_y
        witness["ell"] = ell
        return CheckResult("rank_divisibility", Outcome.PASS, f"ell = {rank_x}/{rank_y} = {ell}", witness, value=ell)

    def ancilla_bound(self, ell: int, p_max: Optional[int], q_max: Optional[int]) -> CheckResult:
        """
        R_i is p x q of rank ell, so ell <= min(p, q) within the ancilla bounds.

        A bound of None limits nothing; with no bound at all the check only
        records that the ancilla dimension is left open.
        """
        witness = {"ell": ell, "p_max": p_max, "q_max": q_max}
        given = [b for b in (p_max, q_max) if b is not None]
        if not given:
            return CheckResult("ancilla_bound", Outcome.PASS,
                               f"ell = {ell}; no ancilla bound given, p, q >= {ell} required", witness)
        if ell > min(given):
            return CheckResult(
                "ancilla_bound", Outcome.IMPOSSIBLE,
                f"rank(R) = {ell} exceeds the ancilla bound min(p_max, q_max) = {min(given)}", witness,
            )
        return CheckResult("ancilla_bound", Outcome.PASS, f"ell = {ell} fits p_max={p_max}, q_max={q_max}", witness)

    # ------------------------------------------------------------------
    # Cross-pair eigenvalues
    # ------------------------------------------------------------------

    def cross_eigenvalues(self, Xi, Xj, tol: Tolerance) -> Dict[str, Any]:
        """
        Nonzero eigenvalues of Xi Xj^H from the compressed core (S_i B_i^H B_j S_j)(A_j^H A_i).

        Returns:
            Dict with "values" (SpectralProfile), "core_size" and the "cutoff"
            used to call an eigenvalue zero.
        """
        Ai, si, Bi = svd(Xi, tol)
        Aj, sj, Bj = svd(Xj, tol)
        scale = (si[0] if si.size else 0.0) * (sj[0] if sj.size else 0.0)
        if si.size == 0 or sj.size == 0:
            return {"values": SpectralProfile([]), "core_size": 0, "cutoff": 0.0}
        core = (np.diag(si) @ Bi.conj().T @ Bj @ np.diag(sj)) @ (Aj.conj().T @ Ai)
        lam = eigvals(core)
        # Eigenvalues of a non-normal core carry sqrt(eps)-sized errors
        cutoff = math.sqrt(tol.abs_eps) * scale
        nonzero = [z for z in lam if abs(z) > cutoff]
        return {"values": SpectralProfile(nonzero), "core_size": int(lam.size), "cutoff": cutoff}

    def partition_search(self, xs: Sequence[complex], ys: Sequence[complex], tol: Tolerance) -> Optional[List[complex]]:
        """
        Find gammas with xs = union of gamma_u * ys, or None.

        The largest remaining x must be gamma times a maximal-magnitude y, so
        only those candidates are branched on.

        Raises:
            SizeLimitError: xs is larger than the partition cap.
        """
        xs = sorted((complex(v) for v in xs), key=_sort_key)
        ys = sorted((complex(v) for v in ys), key=_sort_key)
        if len(xs) > self.partition_cap:
            raise SizeLimitError(
                f"Cross-pair multiset of size {len(xs)} exceeds the partition cap {self.partition_cap}"
            )
        if not ys or len(xs) % len(ys) != 0:
            return None

        y_top = abs(ys[0])
        leaders = [y for y in ys if tol.matches(abs(y), y_top)]
        y_ratios = sorted(abs(y) / y_top for y in ys)

        def search(remaining: List[complex], gammas: List[complex]) -> Optional[List[complex]]:
            if not remaining:
                return gammas
            x0 = remaining[0]
            # Magnitude-ratio prune
            x_ratios = [abs(x) / abs(x0) for x in remaining]
            if _sub_multiset(y_ratios, x_ratios, tol) is None:
                return None
            tried: List[complex] = []
            for y in leaders:
                if any(tol.matches(y, t) for t in tried):
                    continue
                tried.append(y)
                gamma = x0 / y
                left = _sub_multiset([gamma * v for v in ys], remaining, tol)
                if left is None:
                    continue
                found = search(sorted(left, key=_sort_key), gammas + [gamma])
                if found is not None:
                    return found
            return None

        return search(xs, [])

    def cross_pair_test(self, Xi, Xj, Yi, Yj, tol: Tolerance, labels: Sequence[int] = (1, 2)) -> CheckResult:
        """
        Eigenvalues of Xi Xj^H must split into ell blocks, each a scaled copy of eig(Yi Yj^H).

        Eigenvalue comparisons use square-root loosened tolerances so that
        round-off never yields Impossible.

        Raises:
            SizeLimitError: the X-side multiset exceeds the partition cap.
        """
        loose = Tolerance(
            abs_eps=math.sqrt(tol.abs_eps) * max(1.0, frobenius(Xi) * frobenius(Xj)),
            rel_eps=math.sqrt(tol.rel_eps),
            psd_eps=tol.psd_eps,
        )
        x_side = self.cross_eigenvalues(Xi, Xj, tol)
        y_side = self.cross_eigenvalues(Yi, Yj, tol)
        xs, ys = x_side["values"], y_side["values"]
        i, j = labels
        witness: Dict[str, Any] = {
            "pair": [i, j],
            "x_eigenvalues": xs.to_list(),
            "y_eigenvalues": ys.to_list(),
        }
        x_vanish = x_side["core_size"] > len(xs)
        y_vanish = y_side["core_size"] > len(ys)

        if len(xs) == 0 and len(ys) == 0:
            return CheckResult("cross_pair", Outcome.PASS, f"pairs ({i},{j}): both products nilpotent", witness)
        if len(ys) == 0:
            return CheckResult(
                "cross_pair", Outcome.IMPOSSIBLE,
                f"pairs ({i},{j}): eig(Y{i}Y{j}*) has no nonzero value but eig(X{i}X{j}*) does", witness,
            )
        if len(xs) % len(ys) != 0:
            if x_vanish or y_vanish:
                return CheckResult(
                    "cross_pair", Outcome.INCONCLUSIVE,
                    f"pairs ({i},{j}): ell = {len(xs)}/{len(ys)} not integral with vanishing eigenvalues",
                    witness,
                )
            return CheckResult(
                "cross_pair", Outcome.IMPOSSIBLE,
                f"pairs ({i},{j}): {len(xs)} nonzero eigenvalues is not a multiple of {len(ys)}", witness,
            )

        witness["ell"] = len(xs) // len(ys)
        gammas = self.partition_search(xs.values, ys.values, loose)
        if gammas is None:
            logger.debug(f"✗ cross-pair ({i},{j}): no gamma partition")
            return CheckResult(
                "cross_pair", Outcome.IMPOSSIBLE,
                f"pairs ({i},{j}): no partition of eig(X{i}X{j}*) into scaled copies of eig(Y{i}Y{j}*)",
                witness,
            )
        witness["gammas"] = [encode_complex(g) for g in gammas]
        return CheckResult("cross_pair", Outcome.PASS, f"pairs ({i},{j}): gamma partition found", witness,
                           value=gammas)

    # ------------------------------------------------------------------
    # Informational
    # ------------------------------------------------------------------

    def majorization(self, x_svals: Sequence[float], y_svals: Sequence[float], tol: Tolerance) -> bool:
        """
        True when the Schmidt spectrum of x is majorized by that of y.

        Compares partial sums of squared Schmidt coefficients, descending.
        """
        lx = sorted((float(s) ** 2 for s in x_svals), reverse=True)
        ly = sorted((float(s) ** 2 for s in y_svals), reverse=True)
        size = max(len(lx), len(ly))
        lx += [0.0] * (size - len(lx))
        ly += [0.0] * (size - len(ly))
        cx, cy = np.cumsum(lx), np.cumsum(ly)
        return bool(np.all(cx <= cy + tol.abs_eps + tol.rel_eps * np.maximum(cx, cy)))


# Global instance
spectral_service = SpectralService()
