"""Kraus families, unitary certificates and the no-ancilla frame-rigidity check."""

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.json_codec import (
    decode_dense_matrix,
    decode_matrix,
    dumps,
    encode_matrix,
    loads,
    validate,
)
from infrastructure.linalg import (
    Tolerance,
    complete_isometry,
    complete_unitary_rows,
    frobenius,
    kron,
    matrix_to_vec,
    orthonormal_complement,
    svd,
    unit_matrix,
    unitarity_residual,
)
from services.states import TransformProblem
from services.verdicts import CheckResult, Outcome
from utils.errors import ChannelInvalidError, DimensionError, PreconditionError
from utils.log import get_logger

logger = get_logger("channel")


@dataclass
class KrausChannelPair:
    """Local Kraus families: F_a on system A (m x m), G_b on system B (n x n)."""

    F_list: List[np.ndarray]
    G_list: List[np.ndarray]

    @property
    def m(self) -> int:
        return self.F_list[0].shape[0]

    @property
    def n(self) -> int:
        return self.G_list[0].shape[0]

    def trace_residuals(self) -> Tuple[float, float]:
        """(||sum F^H F - I||_F, ||sum G^H G - I||_F)."""
        sf = sum(F.conj().T @ F for F in self.F_list)
        sg = sum(G.conj().T @ G for G in self.G_list)
        return frobenius(sf - np.eye(self.m)), frobenius(sg - np.eye(self.n))

    def validate(self, tol: Tolerance) -> None:
        """Raise ChannelInvalidError unless both families are trace preserving."""
        res_f, res_g = self.trace_residuals()
        bound = 10 * tol.abs_eps
        if res_f > bound or res_g > bound:
            raise ChannelInvalidError(
                f"Kraus family is not trace preserving: ||sum F^H F - I|| = {res_f:.3g}, "
                f"||sum G^H G - I|| = {res_g:.3g}"
            )


@dataclass
class UnitaryCertificate:
    """U (mp x mp), V (nq x nq) and R_i (p x q) with U (E11 (x) X_i) V = R_i (x) Y_i."""

    U: np.ndarray
    V: np.ndarray
    R_list: List[np.ndarray]
    p: int
    q: int

    @property
    def m(self) -> int:
        return self.U.shape[0] // self.p

    @property
    def n(self) -> int:
        return self.V.shape[0] // self.q

    def r_singular_values(self, i: int) -> np.ndarray:
        """Singular values of R_i (0-based), descending."""
        return np.linalg.svd(self.R_list[i], compute_uv=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "q": self.q,
            "U": encode_matrix(self.U),
            "V": encode_matrix(self.V),
            "R": [encode_matrix(R) for R in self.R_list],
        }


@dataclass
class PairResidual:
    pair: int
    residual_c: float
    residual_b: float
    trace_r: float
    threshold: float
    passed: bool


@dataclass
class CertificateReport:
    """Per-pair and unitarity results of verify_certificate."""

    passed: bool
    unitarity_u: float
    unitarity_v: float
    pairs: List[PairResidual] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((max(p.residual_c, p.residual_b) for p in self.pairs), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "unitarity_u": self.unitarity_u,
            "unitarity_v": self.unitarity_v,
            "pairs": [
                {
                    "pair": p.pair,
                    "residual_c": p.residual_c,
                    "residual_b": p.residual_b,
                    "trace_r": p.trace_r,
                    "passed": p.passed,
                }
                for p in self.pairs
            ],
        }


class ChannelService:
    """Service for concrete certificates of a local transformation."""

    # ------------------------------------------------------------------
    # Kraus side
    # ------------------------------------------------------------------

    def apply_channel(self, ch: KrausChannelPair, rho, tol: Tolerance) -> np.ndarray:
        """sum_ab (F_a (x) G_b) rho (F_a (x) G_b)^H."""
        ch.validate(tol)
        rho = np.asarray(rho, dtype=complex)
        dim = ch.m * ch.n
        if rho.shape != (dim, dim):
            raise DimensionError(f"Density matrix is {rho.shape}, expected {dim}x{dim}")
        out = np.zeros_like(rho)
        for F in ch.F_list:
            for G in ch.G_list:
                K = kron(F, G)
                out += K @ rho @ K.conj().T
        return out

    @staticmethod
    def fidelity(rho, y) -> float:
        """<y| rho |y> for a pure target y."""
        y = np.asarray(getattr(y, "amplitudes", y), dtype=complex).reshape(-1)
        return float(np.real(np.vdot(y, np.asarray(rho) @ y)))

    def kraus_from_unitary(self, cert: UnitaryCertificate, tol: Tolerance) -> KrausChannelPair:
        """
        Block extraction: F_a is the (a, 1) m x m block of U, G_b the transpose
        of the (1, b) n x n block of V.
        """
        m, n = cert.m, cert.n
        F_list = [cert.U[a * m:(a + 1) * m, 0:m].copy() for a in range(cert.p)]
        G_list = [cert.V[0:n, b * n:(b + 1) * n].T.copy() for b in range(cert.q)]
        ch = KrausChannelPair(F_list, G_list)
        ch.validate(tol)
        return ch

    def unitary_from_kraus(self, ch: KrausChannelPair, tol: Tolerance,
                           problem: Optional[TransformProblem] = None,
                           R_list: Optional[Sequence[np.ndarray]] = None) -> UnitaryCertificate:
        """
        Dilate a local Kraus family to (U, V).

        U completes the isometry [F_1; ...; F_p] and V the co-isometry
        [G_1^t ... G_q^t]. Without explicit R_list, R_i[a, b] = <y_i|(F_a (x) G_b)|x_i>.
        """
        ch.validate(tol)
        m, n = ch.m, ch.n
        p, q = len(ch.F_list), len(ch.G_list)
        U = complete_isometry(np.vstack(ch.F_list))
        co = np.hstack([G.T for G in ch.G_list])
        V = complete_isometry(co.conj().T).conj().T
        if R_list is None:
            R_list = []
            if problem is not None:
                for pair in problem.pairs:
                    R = np.zeros((p, q), dtype=complex)
                    for a, F in enumerate(ch.F_list):
                        for b, G in enumerate(ch.G_list):
                            R[a, b] = np.vdot(pair.y.amplitudes, kron(F, G) @ pair.x.amplitudes)
                    R_list.append(R)
        if U.shape[0] != m * p or V.shape[0] != n * q:
            raise DimensionError("Dilation has unexpected dimensions")
        return UnitaryCertificate(U, V, [np.asarray(R, dtype=complex) for R in R_list], p, q)

    # ------------------------------------------------------------------
    # Unitary side
    # ------------------------------------------------------------------

    def verify_certificate(self, cert: UnitaryCertificate, problem: TransformProblem,
                           tol: Tolerance) -> CertificateReport:
        """
        Check unitarity, tr R_i R_i^H = 1 and U (E11 (x) X_i) V = R_i (x) Y_i.

        The equation is checked in matrix form and in vector form
        (U (x) V^t) vec(E11 (x) X_i) = vec(R_i (x) Y_i).
        """
        m, n, p, q = problem.m, problem.n, cert.p, cert.q
        if cert.U.shape != (m * p, m * p):
            raise DimensionError(f"U is {cert.U.shape}, expected {m * p}x{m * p}")
        if cert.V.shape != (n * q, n * q):
            raise DimensionError(f"V is {cert.V.shape}, expected {n * q}x{n * q}")
        if len(cert.R_list) != problem.k:
            raise DimensionError(f"Certificate has {len(cert.R_list)} R matrices for {problem.k} pairs")
        for i, R in enumerate(cert.R_list, start=1):
            if R.shape != (p, q):
                raise DimensionError(f"R_{i} is {R.shape}, expected {p}x{q}")

        res_u = unitarity_residual(cert.U)
        res_v = unitarity_residual(cert.V)
        unitary_ok = res_u <= 10 * tol.abs_eps * m * p and res_v <= 10 * tol.abs_eps * n * q

        E11 = unit_matrix(p, q)
        big = kron(cert.U, cert.V.T)
        pairs = []
        for i, (X, Y, R) in enumerate(zip(problem.X_list, problem.Y_list, cert.R_list), start=1):
            lhs = kron(E11, X)
            rhs = kron(R, Y)
            residual_c = frobenius(cert.U @ lhs @ cert.V - rhs)
            residual_b = float(np.linalg.norm(big @ matrix_to_vec(lhs) - matrix_to_vec(rhs)))
            trace_r = float(np.real(np.trace(R @ R.conj().T)))
            threshold = 10 * tol.abs_eps * max(1.0, frobenius(X))
            passed = (
                residual_c <= threshold
                and residual_b <= threshold
                and abs(trace_r - 1.0) <= 10 * tol.rel_eps
            )
            pairs.append(PairResidual(i, residual_c, residual_b, trace_r, threshold, passed))

        report = CertificateReport(unitary_ok and all(p.passed for p in pairs), res_u, res_v, pairs)
        if report.passed:
            logger.info(f"✓ Certificate verified (max residual {report.max_residual:.3g})")
        else:
            logger.info(f"✗ Certificate rejected (max residual {report.max_residual:.3g})")
        return report

    # ------------------------------------------------------------------
    # Certificate files
    # ------------------------------------------------------------------

    def load_certificate(self, text: str) -> UnitaryCertificate:
        """Parse a certificate file; rows given as "*" are completed by Gram-Schmidt."""
        doc = loads(text, "certificate")
        validate(doc, "certificate")
        p, q = doc["p"], doc["q"]
        U = complete_unitary_rows(decode_matrix(doc["U"], "U", allow_star=True))
        V = complete_unitary_rows(decode_matrix(doc["V"], "V", allow_star=True))
        R_list = [decode_dense_matrix(R, f"R_{i}") for i, R in enumerate(doc["R"], start=1)]
        if U.shape[0] % p or V.shape[0] % q:
            raise DimensionError(f"U ({U.shape[0]}) and V ({V.shape[0]}) must be multiples of p={p}, q={q}")
        return UnitaryCertificate(U, V, R_list, p, q)

    def load_certificate_file(self, path) -> UnitaryCertificate:
        with open(Path(path), "r", encoding="utf-8") as f:
            return self.load_certificate(f.read())

    def certificate_to_json(self, cert: UnitaryCertificate) -> str:
        return dumps(cert.to_dict())

    # ------------------------------------------------------------------
    # No-ancilla frame rigidity
    # ------------------------------------------------------------------

    def find_pinning_pair(self, problem: TransformProblem, tol: Tolerance) -> Optional[int]:
        """First pair (0-based) whose X has distinct singular values equal to those of Y."""
        for i, (X, Y) in enumerate(zip(problem.X_list, problem.Y_list)):
            sx, sy = svd(X, tol)[1], svd(Y, tol)[1]
            if sx.size != sy.size:
                continue
            distinct = all(not tol.matches(sx[v], sx[v + 1]) for v in range(sx.size - 1))
            if distinct and all(tol.matches(a, b) for a, b in zip(sx, sy)):
                return i
        return None

    def frame_rigidity_check(self, problem: TransformProblem, tol: Tolerance) -> CheckResult:
        """
        Decide the p = q = 1 case from a pinning pair.

        The pinning pair fixes U A = C Phi and V^H B = D Phi up to diagonal
        phases Phi. Every other pair j must then satisfy
        Phi K11 Phi^H = e^{i theta_j} L11 together with singular-value equalities
        on the off-diagonal blocks and phase-consistent Gram matrices, where K
        and L are X_j and Y_j in the pinned frames.

        Returns:
            Impossible on a violated constraint, Certified when the pinned
            candidate passes verify_certificate, Inconclusive otherwise.

        Raises:
            PreconditionError: no pinning pair exists.
        """
        i0 = self.find_pinning_pair(problem, tol)
        if i0 is None:
            raise PreconditionError("No pair has distinct singular values matching its output")
        loose = Tolerance(abs_eps=math.sqrt(tol.abs_eps), rel_eps=math.sqrt(tol.rel_eps), psd_eps=tol.psd_eps)
        phase_tol = 10 * math.sqrt(tol.rel_eps + tol.abs_eps)

        X0, Y0 = problem.X_list[i0], problem.Y_list[i0]
        A, s, B = svd(X0, tol)
        C, _, D = svd(Y0, tol)
        A_perp, B_perp = orthonormal_complement(A), orthonormal_complement(B)
        C_perp, D_perp = orthonormal_complement(C), orthonormal_complement(D)
        r = s.size
        frame_x_left, frame_x_right = np.hstack([A, A_perp]), np.hstack([B, B_perp])
        frame_y_left, frame_y_right = np.hstack([C, C_perp]), np.hstack([D, D_perp])

        # Phase unknowns: alpha_0..alpha_{r-1}, then one theta per other pair
        others = [j for j in range(problem.k) if j != i0]
        theta_index = {j: r + t for t, j in enumerate(others)}
        constraints: List[Tuple[Dict[int, int], float]] = []

        def impossible(j: int, check: str, message: str, **extra) -> CheckResult:
            witness = {"pinning_pair": i0 + 1, "pair": j + 1, "check": check, **extra}
            logger.debug(f"✗ frame rigidity: pair {j + 1} {check}")
            return CheckResult("frame_rigidity", Outcome.IMPOSSIBLE, f"pair {j + 1}: {message}", witness)

        def same_values(P, Q) -> bool:
            sp = np.linalg.svd(P, compute_uv=False) if P.size else np.zeros(0)
            sq = np.linalg.svd(Q, compute_uv=False) if Q.size else np.zeros(0)
            return all(loose.matches(a, b) for a, b in zip(sp, sq))

        for j in others:
            Xj, Yj = problem.X_list[j], problem.Y_list[j]
            sx, sy = np.linalg.svd(Xj, compute_uv=False), np.linalg.svd(Yj, compute_uv=False)
            if not all(loose.matches(a, b) for a, b in zip(sx, sy)):
                return impossible(j, "singular_values", "X_j and Y_j have different singular values",
                                  x_values=sx.tolist(), y_values=sy.tolist())

            K = frame_x_left.conj().T @ Xj @ frame_x_right
            L = frame_y_left.conj().T @ Yj @ frame_y_right
            K11, L11 = K[:r, :r], L[:r, :r]
            mismatch = np.abs(np.abs(K11) - np.abs(L11)) > loose.abs_eps + loose.rel_eps * np.maximum(np.abs(K11), np.abs(L11))
            if np.any(mismatch):
                a, b = map(int, np.argwhere(mismatch)[0])
                return impossible(j, "k11_magnitude", "pinned-frame block entries differ in magnitude",
                                  entry=[a + 1, b + 1], x_magnitude=float(abs(K11[a, b])),
                                  y_magnitude=float(abs(L11[a, b])))
            for name, P, Q in (("k12", K[:r, r:], L[:r, r:]), ("k21", K[r:, :r], L[r:, :r]),
                               ("k22", K[r:, r:], L[r:, r:])):
                if not same_values(P, Q):
                    return impossible(j, f"{name}_singular_values",
                                      f"pinned-frame block {name.upper()} has different singular values")

            row_x = A.conj().T @ Xj @ Xj.conj().T @ A
            row_y = C.conj().T @ Yj @ Yj.conj().T @ C
            col_x = B.conj().T @ Xj.conj().T @ Xj @ B
            col_y = D.conj().T @ Yj.conj().T @ Yj @ D
            for name, P, Q in (("row_gram", row_x, row_y), ("column_gram", col_x, col_y)):
                mags = np.abs(np.abs(P) - np.abs(Q)) > loose.abs_eps + loose.rel_eps * np.maximum(np.abs(P), np.abs(Q))
                if np.any(mags):
                    a, b = map(int, np.argwhere(mags)[0])
                    return impossible(j, f"{name}_magnitude", f"pinned-frame {name.replace('_', ' ')} differs",
                                      entry=[a + 1, b + 1])
                for a in range(r):
                    for b in range(a + 1, r):
                        if abs(P[a, b]) > loose.abs_eps:
                            constraints.append(({a: 1, b: -1}, float(np.angle(Q[a, b] / P[a, b]))))
            t = theta_index[j]
            for a in range(r):
                for b in range(r):
                    if abs(K11[a, b]) > loose.abs_eps:
                        coeffs: Dict[int, int] = {t: -1}
                        if a != b:
                            coeffs[a] = 1
                            coeffs[b] = -1
                        constraints.append((coeffs, float(np.angle(L11[a, b] / K11[a, b]))))

        values, guessed = self._solve_phases(r + len(others), constraints)
        for coeffs, target in constraints:
            got = sum(c * values[v] for v, c in coeffs.items())
            if abs(np.angle(np.exp(1j * (got - target)))) > phase_tol:
                if guessed:
                    return CheckResult("frame_rigidity", Outcome.INCONCLUSIVE,
                                       "phase constraints are not connected; no consistent choice found",
                                       {"pinning_pair": i0 + 1})
                return CheckResult("frame_rigidity", Outcome.IMPOSSIBLE,
                                   "no choice of singular-vector phases aligns every pair",
                                   {"pinning_pair": i0 + 1, "check": "phase_alignment"})

        # Candidate with identity on the kernel complements
        phi = np.exp(1j * np.asarray(values[:r]))
        U = (C * phi) @ A.conj().T + C_perp @ A_perp.conj().T
        V = (B * phi.conj()) @ D.conj().T + B_perp @ D_perp.conj().T
        R_list = []
        for j in range(problem.k):
            theta = 0.0 if j == i0 else values[theta_index[j]]
            R_list.append(np.array([[np.exp(1j * theta)]]))
        cert = UnitaryCertificate(U, V, R_list, 1, 1)
        report = self.verify_certificate(cert, problem, tol)
        witness = {"pinning_pair": i0 + 1, "max_residual": report.max_residual}
        if report.passed:
            return CheckResult("frame_rigidity", Outcome.CERTIFIED, "pinned frames give a no-ancilla certificate",
                               witness, value=cert)
        return CheckResult("frame_rigidity", Outcome.INCONCLUSIVE,
                           "constraints satisfiable but the pinned candidate does not verify", witness)

    @staticmethod
    def _solve_phases(size: int, constraints: List[Tuple[Dict[int, int], float]]) -> Tuple[List[float], bool]:
        """
        Propagate linear phase constraints sum c_v x_v = w (mod 2 pi).

        Variable 0 is the gauge and starts at 0. When no constraint has a single
        unknown left, the lowest constrained unknown is set to 0 and the
        solution is marked as guessed.
        """
        values: List[Optional[float]] = [None] * size
        constrained = {v for coeffs, _ in constraints for v in coeffs}
        if size:
            values[0] = 0.0
        guessed = False
        while True:
            progress = False
            for coeffs, target in constraints:
                unknown = [v for v in coeffs if values[v] is None]
                if len(unknown) == 1:
                    v = unknown[0]
                    known = sum(c * values[u] for u, c in coeffs.items() if u != v)
                    values[v] = (target - known) / coeffs[v]
                    progress = True
            if progress:
                continue
            pending = sorted(v for v in constrained if values[v] is None)
            if not pending:
                break
            values[pending[0]] = 0.0
            guessed = True
        return [0.0 if v is None else float(v) for v in values], guessed


# Global instance
channel_service = ChannelService()
