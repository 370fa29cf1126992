"""Dense complex linear algebra shared by every verifier service.

State vectors use the row-major correspondence ``x = vec(X^t)``: entry
``X[i, j]`` is ``x[i * n + j]``. With that ordering the local operator
``F (x) G`` acts on the matrix form as ``X -> F X G^t``.
"""

import sys
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from utils.errors import DimensionError, NumericalError, PreconditionError
from utils.log import get_logger

logger = get_logger("linalg")


@dataclass(frozen=True)
class Tolerance:
    """Absolute, relative and PSD tolerances used for every numeric comparison."""

    abs_eps: float = 1e-9
    rel_eps: float = 1e-9
    psd_eps: float = 1e-7

    def __post_init__(self):
        for name in ("abs_eps", "rel_eps", "psd_eps"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise PreconditionError(f"Tolerance.{name} must be a finite non-negative number, got {value}")

    def matches(self, a: complex, b: complex) -> bool:
        """Tolerance-matched equality: |a-b| <= rel_eps*max(|a|,|b|) + abs_eps."""
        return abs(a - b) <= self.rel_eps * max(abs(a), abs(b)) + self.abs_eps

    def is_zero(self, a: complex) -> bool:
        return abs(a) <= self.abs_eps


DEFAULT_TOLERANCE = Tolerance()


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Convert to a finite 2-D complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have positive dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries")
    return arr


def vec_to_matrix(x, m: int, n: int) -> np.ndarray:
    """Matrix form X (m x n) of a state vector, X[i, j] = x[i*n + j]."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    if m < 1 or n < 1 or x.size != m * n:
        raise DimensionError(f"Vector of length {x.size} does not fit an {m}x{n} matrix")
    return x.reshape(m, n).copy()


def matrix_to_vec(X) -> np.ndarray:
    """State vector of a matrix form; the inverse of vec_to_matrix."""
    return np.asarray(X, dtype=complex).reshape(-1).copy()


def vec(X) -> np.ndarray:
    """Column-stacking vectorization, vec(AXB) = (B^t kron A) vec(X)."""
    return np.asarray(X, dtype=complex).reshape(-1, order="F").copy()


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of the column-stacking vec."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size != rows * cols:
        raise DimensionError(f"Vector of length {v.size} does not fit a {rows}x{cols} matrix")
    return v.reshape(rows, cols, order="F").copy()


def _raw_svd(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as e:
        logger.warning(f"⚠️  gesdd did not converge ({e}), retrying with gesvd")
    try:
        return scipy.linalg.svd(X, full_matrices=False, lapack_driver="gesvd")
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD of a {X.shape[0]}x{X.shape[1]} matrix did not converge: {e}", attempts=2) from e


def svd(X, tol: Tolerance = DEFAULT_TOLERANCE) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Thin SVD truncated to the numerical rank.

    Singular values at or below ``tol.abs_eps`` times the largest one count
    as zero.

    Args:
        X: Complex matrix.
        tol: Tolerance used for the rank decision.

    Returns:
        Tuple (A, s, B) with X ~= A @ diag(s) @ B^H, s descending and positive,
        A (m x r) and B (n x r) with orthonormal columns.
    """
    X = as_cmatrix(X)
    left, s, vh = _raw_svd(X)
    s_max = s[0] if s.size else 0.0
    keep = s > tol.abs_eps * s_max
    r = int(np.count_nonzero(keep))
    return left[:, :r], s[:r].copy(), vh[:r, :].conj().T


def singular_values(X, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Nonzero singular values, descending."""
    return svd(X, tol)[1]


def numerical_rank(X, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    return int(singular_values(X, tol).size)


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right."""
    if not mats:
        raise DimensionError("kron needs at least one factor")
    return reduce(np.kron, [np.asarray(a, dtype=complex) for a in mats])


def schur(A, B) -> np.ndarray:
    """Entrywise (Hadamard) product of equally shaped matrices."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise DimensionError(f"Schur product needs equal shapes, got {A.shape} and {B.shape}")
    return A * B


def partial_trace_B(x, m: Optional[int] = None, n: Optional[int] = None) -> np.ndarray:
    """
    Reduced density matrix tr_B |x><x| = X X^H.

    Accepts a BipartiteState (anything with a ``matrix`` attribute), a matrix
    form, or a state vector together with (m, n).
    """
    X = getattr(x, "matrix", x)
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        if m is None or n is None:
            raise DimensionError("A state vector needs (m, n) for the partial trace")
        X = vec_to_matrix(X, m, n)
    return X @ X.conj().T


def eigvals(A) -> np.ndarray:
    """Eigenvalues of a general square matrix."""
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"Eigenvalues need a square matrix, got {A.shape}")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigenvalue iteration did not converge: {e}", attempts=1) from e


def hermitian_part(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return (A + A.conj().T) / 2


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue of the Hermitian part of A."""
    return float(np.linalg.eigvalsh(hermitian_part(A))[0])


def frobenius(A) -> float:
    return float(np.linalg.norm(np.asarray(A, dtype=complex)))


def unit_matrix(rows: int, cols: int) -> np.ndarray:
    """E11: the rows x cols matrix with a single 1 in the top-left corner."""
    E = np.zeros((rows, cols), dtype=complex)
    E[0, 0] = 1.0
    return E


def unitarity_residual(U) -> float:
    """||U U^H - I||_F."""
    U = np.asarray(U, dtype=complex)
    return frobenius(U @ U.conj().T - np.eye(U.shape[0]))


def is_unitary(U, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return unitarity_residual(U) <= 10 * tol.abs_eps * U.shape[0]


def orthonormal_complement(W) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of W's column space."""
    W = np.asarray(W, dtype=complex)
    if W.shape[1] == 0:
        return np.eye(W.shape[0], dtype=complex)
    return scipy.linalg.null_space(W.conj().T).astype(complex)


def complete_isometry(W) -> np.ndarray:
    """Extend orthonormal columns W (d x r) to a d x d unitary [W W_perp]."""
    W = np.asarray(W, dtype=complex)
    if W.shape[1] > W.shape[0]:
        raise DimensionError(f"Cannot complete {W.shape[1]} columns in dimension {W.shape[0]}")
    return np.hstack([W, orthonormal_complement(W)])


def complete_unitary_rows(rows: Sequence[Optional[Sequence[complex]]], dim: Optional[int] = None) -> np.ndarray:
    """
    Fill unspecified rows of a unitary by Gram-Schmidt over e_1, e_2, ...

    Rows given as None are filled in index order; each takes the first standard
    basis vector with a nonzero component orthogonal to every row fixed so far.

    Args:
        rows: Row vectors, None for a starred row.
        dim: Row length; defaults to the number of rows.

    Returns:
        Square complex matrix with the given rows kept verbatim.
    """
    dim = dim or len(rows)
    if len(rows) != dim:
        raise DimensionError(f"A {dim}x{dim} unitary needs {dim} rows, got {len(rows)}")

    fixed: List[np.ndarray] = []
    for r in rows:
        if r is None:
            continue
        r = np.asarray(r, dtype=complex).reshape(-1)
        if r.size != dim:
            raise DimensionError(f"Row of length {r.size} in a {dim}x{dim} unitary")
        fixed.append(r)

    out = np.zeros((dim, dim), dtype=complex)
    candidate = 0
    for idx, r in enumerate(rows):
        if r is not None:
            out[idx] = np.asarray(r, dtype=complex).reshape(-1)
            continue
        while True:
            if candidate >= dim:
                raise NumericalError(f"Ran out of basis vectors completing row {idx}", attempts=dim)
            v = np.zeros(dim, dtype=complex)
            v[candidate] = 1.0
            candidate += 1
            for f in fixed:
                v = v - np.vdot(f, v) * f
            norm = np.linalg.norm(v)
            if norm > 1e-8:
                v = v / norm
                break
        out[idx] = v
        fixed.append(v)
    return out


def nearest_unitary(M) -> np.ndarray:
    """Unitary polar factor of a square matrix (Procrustes solution)."""
    M = as_cmatrix(M)
    W, _ = scipy.linalg.polar(M)
    return W


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Gaussian with phase-fixed R diagonal."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    phases = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return Q * phases
