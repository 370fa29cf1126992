"""Services module for the verifier's decision logic."""

import sys
from pathlib import Path

# Ensure parent is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from services.channel_service import ChannelService, KrausChannelPair, UnitaryCertificate, channel_service
from services.example_service import ExampleService, example_service
from services.gram_service import GramService, gram_service
from services.problem_service import ProblemService, problem_service
from services.reduction_service import ReductionService, reduction_service
from services.search_service import SearchConfig, SearchService, search_service
from services.spectral_service import SpectralService, spectral_service
from services.states import BipartiteState, MixedInputProblem, StatePair, TransformProblem
from services.verdict_service import VerdictService, verdict_service
from services.verdicts import CheckResult, Outcome, Status, TraceEntry, Verdict

__all__ = [
    "BipartiteState",
    "StatePair",
    "TransformProblem",
    "MixedInputProblem",
    "CheckResult",
    "Outcome",
    "Status",
    "TraceEntry",
    "Verdict",
    "ProblemService",
    "problem_service",
    "SpectralService",
    "spectral_service",
    "GramService",
    "gram_service",
    "ReductionService",
    "reduction_service",
    "ChannelService",
    "KrausChannelPair",
    "UnitaryCertificate",
    "channel_service",
    "SearchConfig",
    "SearchService",
    "search_service",
    "VerdictService",
    "verdict_service",
    "ExampleService",
    "example_service",
]
