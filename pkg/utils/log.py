"""Logger factory shared by all modules."""

import logging
import sys

_configured = False


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever sys.stderr is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def configure_logging(level: str = "WARNING") -> None:
    """
    Attach a single stderr handler to the package root logger.

    Reports go to stdout, so progress messages must stay on stderr.

    Args:
        level: Logging level name (DEBUG, INFO, WARNING, ...).
    """
    global _configured
    root = logging.getLogger("lo_verify")
    if not _configured:
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(getattr(logging, str(level).upper(), logging.WARNING))


def get_logger(name: str) -> logging.Logger:
    """Get a child logger of the package root logger."""
    return logging.getLogger(f"lo_verify.{name}")
