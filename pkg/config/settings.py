"""Verifier settings and configuration constants."""

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


@dataclass
class Settings:
    """Verifier configuration settings."""

    # Tolerances (see infrastructure.linalg.Tolerance)
    abs_eps: Optional[float] = None
    rel_eps: Optional[float] = None
    psd_eps: Optional[float] = None

    # Correlation-matrix completion (Dykstra iterations)
    max_iters: Optional[int] = None

    # Largest eigenvalue multiset the cross-pair partition search will enumerate
    partition_cap: Optional[int] = None

    # Largest p / q the search visits for an ancilla the problem leaves unbounded
    search_p_cap: Optional[int] = None
    search_q_cap: Optional[int] = None

    # Certificate search
    search_seed: Optional[int] = None
    search_restarts: Optional[int] = None
    search_max_sweeps: Optional[int] = None
    search_convergence_eps: float = 1e-10
    search_workers: Optional[int] = None

    log_level: Optional[str] = None

    # Data directories (relative to the repository root)
    fixtures_dir: Optional[Path] = None
    schema_dir: Optional[Path] = None

    def __post_init__(self):
        """Fill unset fields from the environment, then from defaults."""
        if self.abs_eps is None:
            self.abs_eps = _env_float("LO_VERIFY_ABS_EPS", 1e-9)
        if self.rel_eps is None:
            self.rel_eps = _env_float("LO_VERIFY_REL_EPS", 1e-9)
        if self.psd_eps is None:
            self.psd_eps = _env_float("LO_VERIFY_PSD_EPS", 1e-7)
        if self.max_iters is None:
            self.max_iters = _env_int("LO_VERIFY_MAX_ITERS", 10000)
        if self.partition_cap is None:
            self.partition_cap = _env_int("LO_VERIFY_PARTITION_CAP", 12)
        if self.search_p_cap is None:
            self.search_p_cap = _env_int("LO_VERIFY_SEARCH_P_CAP", 2)
        if self.search_q_cap is None:
            self.search_q_cap = _env_int("LO_VERIFY_SEARCH_Q_CAP", 2)
        if self.search_seed is None:
            self.search_seed = _env_int("LO_VERIFY_SEED", 0)
        if self.search_restarts is None:
            self.search_restarts = _env_int("LO_VERIFY_RESTARTS", 32)
        if self.search_max_sweeps is None:
            self.search_max_sweeps = _env_int("LO_VERIFY_MAX_SWEEPS", 500)
        if self.search_workers is None:
            self.search_workers = _env_int("LO_VERIFY_WORKERS", 1)
        if self.log_level is None:
            self.log_level = os.getenv("LO_VERIFY_LOG_LEVEL", "WARNING")

        root = Path(__file__).parent.parent
        if self.fixtures_dir is None:
            env_dir = os.getenv("LO_VERIFY_FIXTURES_DIR")
            self.fixtures_dir = Path(env_dir) if env_dir else root / "fixtures"
        if self.schema_dir is None:
            self.schema_dir = root / "schemas"

    def reload(self) -> None:
        """Re-read every field from the environment (after a YAML file was exported)."""
        fresh = Settings()
        for f in fields(self):
            setattr(self, f.name, getattr(fresh, f.name))

    def tolerance(self):
        """Build the Tolerance value used by the numeric services."""
        from infrastructure.linalg import Tolerance

        return Tolerance(abs_eps=self.abs_eps, rel_eps=self.rel_eps, psd_eps=self.psd_eps)

    @property
    def catalog_path(self) -> Path:
        """Path of the fixture catalog."""
        return Path(self.fixtures_dir) / "catalog.yaml"


# Global settings instance
settings = Settings()
