"""Shared fixtures: tolerance, seeded generator and the built-in problem files."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure the package root is in path
_root = Path(__file__).resolve().parent.parent
if str(_root) not in sys.path:
    sys.path.insert(0, str(_root))

from infrastructure.linalg import Tolerance
from services.problem_service import problem_service

FIXTURES = _root / "fixtures"


@pytest.fixture
def tol():
    return Tolerance()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def load_fixture(tol):
    """Load a problem from fixtures/ by file stem."""

    def _load(stem: str):
        return problem_service.load_problem_file(FIXTURES / f"{stem}.json", tol=tol)

    return _load
