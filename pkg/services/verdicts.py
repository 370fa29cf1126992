"""Verdict lattice, check results and the pipeline trace."""

import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))


class Status(str, Enum):
    """Overall verdict."""

    IMPOSSIBLE = "impossible"
    CERTIFIED = "certified"
    INCONCLUSIVE = "inconclusive"

    @property
    def exit_code(self) -> int:
        return {Status.CERTIFIED: 0, Status.IMPOSSIBLE: 1, Status.INCONCLUSIVE: 2}[self]


class Outcome(str, Enum):
    """Outcome of a single check."""

    PASS = "pass"
    IMPOSSIBLE = "impossible"
    INCONCLUSIVE = "inconclusive"
    CERTIFIED = "certified"
    SKIPPED = "skipped"

    @property
    def exit_code(self) -> int:
        if self in (Outcome.PASS, Outcome.CERTIFIED):
            return 0
        if self is Outcome.IMPOSSIBLE:
            return 1
        return 2


@dataclass
class CheckResult:
    """
    Result of one necessary condition or constructive check.

    ``witness`` is JSON-ready and is what a report shows; ``value`` carries the
    in-memory payload (a RatioWitness, a completed matrix, a certificate ...).
    """

    condition: str
    outcome: Outcome
    message: str = ""
    witness: Dict[str, Any] = field(default_factory=dict)
    value: Any = None
    warnings: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.outcome in (Outcome.PASS, Outcome.CERTIFIED)

    @property
    def impossible(self) -> bool:
        return self.outcome is Outcome.IMPOSSIBLE

    def to_dict(self) -> Dict[str, Any]:
        out = {"condition": self.condition, "outcome": self.outcome.value, "message": self.message}
        if self.witness:
            out["witness"] = self.witness
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


@dataclass
class TraceEntry:
    """One executed check in pipeline order."""

    stage: int
    check: str
    outcome: Outcome
    elapsed: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "check": self.check,
            "outcome": self.outcome.value,
            "elapsed": round(float(self.elapsed), 6),
            "detail": self.detail,
        }


@dataclass
class Verdict:
    """Final answer of the verdict engine, with witness or certificate and the full trace."""

    status: Status
    reason: Dict[str, Any] = field(default_factory=dict)
    trace: List[TraceEntry] = field(default_factory=list)
    certificate: Any = None
    warnings: List[str] = field(default_factory=list)
    stage: Optional[int] = None

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    @property
    def condition(self) -> Optional[str]:
        return self.reason.get("condition")

    def to_dict(self) -> Dict[str, Any]:
        """Report document (see schemas/report.schema.json)."""
        out: Dict[str, Any] = {
            "status": self.status.value,
            "reason": self.reason,
            "trace": [t.to_dict() for t in self.trace],
        }
        if self.stage is not None:
            out["stage"] = self.stage
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out
