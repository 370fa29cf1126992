"""Tests for the decision pipeline."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from config.settings import settings as verifier_settings
from infrastructure.linalg import Tolerance
from services.search_service import SearchConfig
from services.states import BipartiteState, TransformProblem
from services.verdict_service import (
    STAGE_CROSS_PAIR,
    STAGE_FRAME,
    STAGE_SEARCH,
    STAGE_SPECTRAL,
    verdict_service,
)
from services.verdicts import Outcome, Status
from services.channel_service import channel_service
from tests.helpers import constructed_feasible_problem, diagonal_state, local_unitary_problem
from utils.errors import PreconditionError


def test_section3_joint_fails_cross_pair(load_fixture, tol):
    problem = load_fixture("sec3_joint")
    verdict = verdict_service.decide(problem, tol=tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.exit_code == 1
    assert verdict.stage == STAGE_CROSS_PAIR
    assert verdict.condition == "cross_pair"
    assert [t.stage for t in verdict.trace][-1] == STAGE_CROSS_PAIR
    assert all(t.outcome is Outcome.PASS for t in verdict.trace if t.stage == STAGE_SPECTRAL)
    assert verdict_service.replay(problem, verdict, tol).impossible


def test_compatible_singular_values_still_impossible(load_fixture, tol):
    verdict = verdict_service.decide(load_fixture("ex2p3"), tol=tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.stage == STAGE_CROSS_PAIR


def test_no_ancilla_example_fails_frame_rigidity(load_fixture, tol):
    problem = load_fixture("ex2p1_noancilla")
    verdict = verdict_service.decide(problem, tol=tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.stage == STAGE_FRAME
    assert verdict.condition == "frame_rigidity"
    assert verdict_service.replay(problem, verdict, tol).impossible


def test_ancilla_example_without_search_is_inconclusive(load_fixture, tol):
    verdict = verdict_service.decide(load_fixture("ex2p1"), tol=tol, run_search=False)
    assert verdict.status is Status.INCONCLUSIVE
    assert verdict.exit_code == 2
    assert verdict.reason["condition"] == "pipeline"
    assert verdict.reason["frame_rigidity"]["outcome"] == "impossible"
    assert verdict.trace[-1].outcome is Outcome.SKIPPED
    assert verdict.trace[-1].stage == STAGE_SEARCH
    assert verdict.warnings


def test_single_pair_certificate(load_fixture, tol):
    problem = load_fixture("sec3_pair1")
    verdict = verdict_service.decide(problem, tol=tol)
    assert verdict.status is Status.CERTIFIED
    assert verdict.exit_code == 0
    assert (verdict.reason["p"], verdict.reason["q"]) == (2, 2)
    np.testing.assert_allclose(verdict.reason["r_singular_values"], [2 / np.sqrt(5), 1 / np.sqrt(5)], atol=1e-12)
    assert channel_service.verify_certificate(verdict.certificate, problem, tol).passed


def test_single_pair_second_section3_pair(load_fixture, tol):
    verdict = verdict_service.decide(load_fixture("sec3_pair2"), tol=tol)
    assert verdict.status is Status.CERTIFIED
    np.testing.assert_allclose(verdict.reason["r_singular_values"], [0.8, 0.6], atol=1e-12)


def test_single_pair_respects_ancilla_bounds(load_fixture, tol):
    problem = load_fixture("sec3_pair1").with_bounds(1, 1)
    verdict = verdict_service.decide(problem, tol=tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.condition == "ancilla_bound"
    assert verdict_service.replay(problem, verdict, tol).impossible


def test_single_pair_peel_failure(tol):
    x = BipartiteState.from_matrix(diagonal_state([0.8, 0.4, 0.4, 0.2], 4, 4))
    y = BipartiteState.from_matrix(diagonal_state([0.8, 0.6], 4, 4))
    verdict = verdict_service.decide_single_pair(x, y, tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.condition == "peel"
    problem = TransformProblem.from_matrices([x.matrix], [y.matrix])
    assert verdict_service.replay(problem, verdict, tol).impossible


def test_single_pair_rank_failure(tol):
    x = BipartiteState.from_matrix(diagonal_state([0.8, 0.48, 0.36], 3, 3))
    y = BipartiteState.from_matrix(diagonal_state([0.8, 0.6], 3, 3))
    verdict = verdict_service.decide_single_pair(x, y, tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.condition == "rank_divisibility"


def test_local_unitaries_certified_by_frame_rigidity(rng, tol):
    problem = local_unitary_problem(3, 3, 2, rng)
    verdict = verdict_service.decide(problem, tol=tol, run_search=False)
    assert verdict.status is Status.CERTIFIED
    assert verdict.stage == STAGE_FRAME
    assert channel_service.verify_certificate(verdict.certificate, problem, tol).passed


@given(m=st.integers(2, 3), n=st.integers(2, 3), k=st.integers(2, 3), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_feasible_problems_are_never_impossible(m, n, k, seed):
    problem = local_unitary_problem(m, n, k, np.random.default_rng(seed))
    verdict = verdict_service.decide(problem, tol=Tolerance(), run_search=False)
    assert verdict.status is not Status.IMPOSSIBLE


def test_search_dimensions_order_and_bounds(load_fixture):
    problem = load_fixture("sec3_joint").with_bounds(3, 2)
    dims = verdict_service.search_dimensions(problem, [1, 1], skip_no_ancilla=True)
    assert (1, 1) not in dims
    assert dims == sorted(dims, key=lambda d: (d[0] * d[1], d[0]))
    assert verdict_service.search_dimensions(problem, [2], skip_no_ancilla=False) == [(2, 2), (3, 2)]


def test_unbounded_search_uses_caps(load_fixture, monkeypatch):
    monkeypatch.setattr(verifier_settings, "search_p_cap", 2)
    monkeypatch.setattr(verifier_settings, "search_q_cap", 2)
    joint = load_fixture("sec3_joint")
    problem = TransformProblem.from_matrices(joint.X_list, joint.Y_list, p_max=None, q_max=None)
    assert verdict_service.search_dimensions(problem, [1, 1], skip_no_ancilla=False) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    # The cap grows to the largest ell
    assert verdict_service.search_dimensions(problem, [3], skip_no_ancilla=False) == [(3, 3)]
    half = TransformProblem.from_matrices(joint.X_list, joint.Y_list, p_max=1, q_max=None)
    assert verdict_service.search_dimensions(half, [1], skip_no_ancilla=False) == [(1, 1), (1, 2)]


def _spread_pairs(k: int, **bounds) -> TransformProblem:
    X = np.eye(3) / np.sqrt(3)
    Y = np.zeros((3, 3))
    Y[0, 0] = 1.0
    return TransformProblem.from_matrices([X] * k, [Y] * k, **bounds)


def test_missing_bounds_never_give_ancilla_impossible(tol):
    single = verdict_service.decide(_spread_pairs(1, p_max=None, q_max=None), tol=tol)
    assert single.status is Status.CERTIFIED
    assert single.certificate.p == 3

    repeated = verdict_service.decide(_spread_pairs(2, p_max=None, q_max=None),
                                      SearchConfig(restarts=2, max_sweeps=50), tol)
    assert repeated.status is not Status.IMPOSSIBLE
    bounds = [t for t in repeated.trace if t.check.startswith("ancilla_bound")]
    assert len(bounds) == 2 and all(t.outcome is Outcome.PASS for t in bounds)
    if repeated.status is Status.INCONCLUSIVE:
        assert repeated.reason["search_range"]["p_max"] == 3


def test_given_bounds_give_ancilla_impossible(tol):
    verdict = verdict_service.decide(_spread_pairs(2, p_max=None, q_max=2), tol=tol)
    assert verdict.status is Status.IMPOSSIBLE
    assert verdict.condition == "ancilla_bound"
    assert verdict_service.replay(_spread_pairs(2, p_max=None, q_max=2), verdict, tol).impossible


def test_stage_five_certifies_with_search(tol):
    # Both pairs are the same product state, so stage 4 or the search certifies
    e = np.eye(2)
    X1 = np.outer(e[0], e[1])
    Y1 = np.outer(e[1], e[0])
    problem = TransformProblem.from_matrices([X1, X1], [Y1, Y1])
    verdict = verdict_service.decide(problem, SearchConfig(restarts=4), tol)
    assert verdict.status is Status.CERTIFIED
    assert verdict.stage in (STAGE_FRAME, STAGE_SEARCH)


def test_replay_requires_impossible(load_fixture, tol):
    problem = load_fixture("sec3_pair1")
    verdict = verdict_service.decide(problem, tol=tol)
    with pytest.raises(PreconditionError):
        verdict_service.replay(problem, verdict, tol)


def test_verdict_document_shape(load_fixture, tol):
    doc = verdict_service.decide(load_fixture("sec3_joint"), tol=tol).to_dict()
    assert doc["status"] == "impossible"
    assert doc["stage"] == 2
    assert {"stage", "check", "outcome", "elapsed", "detail"} <= set(doc["trace"][0])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_constructed_feasible_problems_are_never_impossible(seed, tol):
    problem, _ = constructed_feasible_problem(2, 2, 2, 2, np.random.default_rng(seed))
    verdict = verdict_service.decide(problem, tol=tol, run_search=False)
    assert verdict.status is not Status.IMPOSSIBLE
    assert not any(t.outcome is Outcome.IMPOSSIBLE for t in verdict.trace if t.stage != STAGE_FRAME)


@pytest.mark.parametrize("stem", ["sec3_joint", "ex2p3", "ex2p1_noancilla", "ex2p1"])
def test_verdict_ignores_global_phases(stem, load_fixture, tol):
    problem = load_fixture(stem)
    rng = np.random.default_rng(5)
    phases = np.exp(2j * np.pi * rng.uniform(size=(2, problem.k)))
    rotated = TransformProblem.from_matrices(
        [a * X for a, X in zip(phases[0], problem.X_list)],
        [b * Y for b, Y in zip(phases[1], problem.Y_list)],
        p_max=problem.p_max, q_max=problem.q_max,
    )
    before = verdict_service.decide(problem, tol=tol, run_search=False)
    after = verdict_service.decide(rotated, tol=tol, run_search=False)
    assert after.status is before.status
    assert after.stage == before.stage
    assert after.condition == before.condition
    assert [(t.check, t.outcome) for t in after.trace] == [(t.check, t.outcome) for t in before.trace]


@pytest.mark.parametrize("seed", range(10))
def test_local_unitary_verdict_ignores_global_phases(seed, tol):
    rng = np.random.default_rng(seed)
    problem = local_unitary_problem(3, 3, 2, rng)
    phases = np.exp(2j * np.pi * rng.uniform(size=problem.k))
    rotated = TransformProblem.from_matrices([a * X for a, X in zip(phases, problem.X_list)], problem.Y_list)
    verdict = verdict_service.decide(rotated, tol=tol, run_search=False)
    assert verdict.status is Status.CERTIFIED
    assert channel_service.verify_certificate(verdict.certificate, rotated, tol).passed
