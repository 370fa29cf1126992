"""Utility module for errors and logging."""

import sys
from pathlib import Path

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from utils.errors import (
    ChannelInvalidError,
    DegeneracyWarning,
    DimensionError,
    NormalizationError,
    NumericalError,
    ParseError,
    PreconditionError,
    SizeLimitError,
    VerifierError,
    ZeroComponentError,
    ZeroMatrixError,
)
from utils.log import configure_logging, get_logger

__all__ = [
    "ChannelInvalidError",
    "DegeneracyWarning",
    "DimensionError",
    "NormalizationError",
    "NumericalError",
    "ParseError",
    "PreconditionError",
    "SizeLimitError",
    "VerifierError",
    "ZeroComponentError",
    "ZeroMatrixError",
    "configure_logging",
    "get_logger",
]
