"""Seeded alternating search for unitary certificates at fixed ancilla dimensions."""

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.linalg import Tolerance, haar_unitary, kron, nearest_unitary, unit_matrix
from services.channel_service import CertificateReport, UnitaryCertificate, channel_service
from services.states import TransformProblem
from utils.errors import NumericalError, PreconditionError
from utils.log import get_logger

logger = get_logger("search")


@dataclass
class SearchConfig:
    """Search parameters; unset fields come from settings."""

    p: int = 1
    q: int = 1
    seed: Optional[int] = None
    restarts: Optional[int] = None
    max_sweeps: Optional[int] = None
    convergence_eps: Optional[float] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if self.seed is None:
            self.seed = settings.search_seed
        if self.restarts is None:
            self.restarts = settings.search_restarts
        if self.max_sweeps is None:
            self.max_sweeps = settings.search_max_sweeps
        if self.convergence_eps is None:
            self.convergence_eps = settings.search_convergence_eps
        if self.workers is None:
            self.workers = settings.search_workers
        if self.seed < 0:
            raise PreconditionError(f"seed must be >= 0, got {self.seed}")
        if self.restarts < 1:
            raise PreconditionError(f"restarts must be >= 1, got {self.restarts}")
        if self.p < 1 or self.q < 1:
            raise PreconditionError(f"ancilla dimensions must be >= 1, got p={self.p}, q={self.q}")
        if self.max_sweeps < 1:
            raise PreconditionError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        self.workers = max(1, int(self.workers))

    def with_dims(self, p: int, q: int) -> "SearchConfig":
        return SearchConfig(p=p, q=q, seed=self.seed, restarts=self.restarts, max_sweeps=self.max_sweeps,
                            convergence_eps=self.convergence_eps, workers=self.workers)


@dataclass
class RestartResult:
    restart: int
    objective: float
    sweeps: int
    certificate: UnitaryCertificate
    history: List[float] = field(default_factory=list)


@dataclass
class SearchOutcome:
    """Certified (with a verified certificate) or NotFound with the best objective."""

    found: bool
    p: int
    q: int
    best_objective: float
    best_restart: int
    restarts: int
    certificate: Optional[UnitaryCertificate] = None
    report: Optional[CertificateReport] = None
    history: List[float] = field(default_factory=list)

    @property
    def best_residual(self) -> float:
        return float(np.sqrt(max(self.best_objective, 0.0)))

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "found": self.found,
            "p": self.p,
            "q": self.q,
            "best_objective": self.best_objective,
            "best_residual": self.best_residual,
            "best_restart": self.best_restart,
            "restarts": self.restarts,
            "sweeps": len(self.history),
        }
        if not self.found:
            out["note"] = "no certificate found; this is not evidence that none exists"
        return out


def _objective(U, V, Z_list, R_list, Y_list) -> float:
    return float(sum(
        np.linalg.norm(U @ Z @ V - kron(R, Y)) ** 2 for Z, R, Y in zip(Z_list, R_list, Y_list)
    ))


def _update_r(W: np.ndarray, Y: np.ndarray, p: int, q: int, R_old: np.ndarray) -> np.ndarray:
    """Best R with ||R||_F = 1 for ||W - R (x) Y||_F: R_ab proportional to tr(Y^H W_ab)."""
    m, n = Y.shape
    c = np.empty((p, q), dtype=complex)
    for a in range(p):
        for b in range(q):
            c[a, b] = np.vdot(Y, W[a * m:(a + 1) * m, b * n:(b + 1) * n])
    norm = np.linalg.norm(c)
    if norm == 0.0:
        return R_old
    return c / norm


class SearchService:
    """Service for the best-effort certificate finder."""

    def _run_restart(self, problem: TransformProblem, cfg: SearchConfig, restart: int,
                     stop_below: float) -> RestartResult:
        p, q, m, n = cfg.p, cfg.q, problem.m, problem.n
        rng = np.random.default_rng([cfg.seed, restart])
        U = haar_unitary(m * p, rng)
        V = haar_unitary(n * q, rng)
        R_list = []
        for _ in range(problem.k):
            R = rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))
            R_list.append(R / np.linalg.norm(R))

        E11 = unit_matrix(p, q)
        Z_list = [kron(E11, X) for X in problem.X_list]
        Y_list = problem.Y_list

        history = [_objective(U, V, Z_list, R_list, Y_list)]
        sweeps = 0
        for sweeps in range(1, cfg.max_sweeps + 1):
            R_list = [_update_r(U @ Z @ V, Y, p, q, R) for Z, Y, R in zip(Z_list, Y_list, R_list)]
            T_list = [kron(R, Y) for R, Y in zip(R_list, Y_list)]
            U = nearest_unitary(sum(T @ (Z @ V).conj().T for T, Z in zip(T_list, Z_list)))
            V = nearest_unitary(sum((U @ Z).conj().T @ T for T, Z in zip(T_list, Z_list)))

            f = _objective(U, V, Z_list, R_list, Y_list)
            prev = history[-1]
            if f > prev * (1 + 1e-9) + 1e-14:
                raise NumericalError(
                    f"restart {restart}: objective rose from {prev:.6e} to {f:.6e} at sweep {sweeps}", attempts=sweeps
                )
            history.append(f)
            if np.sqrt(f) < stop_below:
                break
            if prev > 0 and (prev - f) / prev < cfg.convergence_eps:
                break

        cert = UnitaryCertificate(U, V, R_list, p, q)
        return RestartResult(restart, history[-1], sweeps, cert, history)

    def search_certificate(self, problem: TransformProblem, cfg: SearchConfig,
                           tol: Tolerance) -> SearchOutcome:
        """
        Alternating minimization of sum_i ||U (E11 (x) X_i) V - R_i (x) Y_i||_F^2.

        Each sweep sets every R_i to its optimal unit-norm value, then U and V
        to the polar factors of their Procrustes cross matrices, so the
        objective never increases; a rise beyond rounding raises NumericalError.
        Restarts are independent and seeded by (seed, restart index); the best
        restart by (objective, index) is verified and only a certificate
        accepted by verify_certificate counts.
        """
        # Acceptance is per pair at 10 abs_eps; stop a restart well inside that
        stop_below = tol.abs_eps
        logger.info(f"Searching p={cfg.p}, q={cfg.q} with {cfg.restarts} restarts (seed {cfg.seed})")

        indices = list(range(cfg.restarts))
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(lambda r: self._run_restart(problem, cfg, r, stop_below), indices))
        else:
            results = [self._run_restart(problem, cfg, r, stop_below) for r in indices]

        best = min(results, key=lambda res: (res.objective, res.restart))
        report = channel_service.verify_certificate(best.certificate, problem, tol)
        if report.passed:
            logger.info(f"✓ Certificate found at p={cfg.p}, q={cfg.q} (restart {best.restart}, "
                        f"{best.sweeps} sweeps)")
            return SearchOutcome(True, cfg.p, cfg.q, best.objective, best.restart, cfg.restarts,
                                 best.certificate, report, best.history)

        logger.info(f"✗ No certificate at p={cfg.p}, q={cfg.q}; best residual {np.sqrt(best.objective):.3e}")
        return SearchOutcome(False, cfg.p, cfg.q, best.objective, best.restart, cfg.restarts,
                             history=best.history)


# Global instance
search_service = SearchService()
