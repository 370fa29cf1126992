"""Tests for rank divisibility, peeling, the cross-pair test and majorization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infrastructure.linalg import Tolerance
from services.spectral_service import SpectralProfile, SpectralService, spectral_service
from services.verdicts import Outcome
from tests.helpers import diagonal_state, local_unitary_problem
from utils.errors import PreconditionError, SizeLimitError, ZeroMatrixError


@pytest.mark.parametrize(
    "beta, feasible, gammas",
    [
        ([2, 1], True, [2, 1]),
        ([4, 2], True, [1, 0.5]),
        ([2, 1, 1], False, None),
        ([2, 0.5], False, None),
        ([1, 1], False, None),
    ],
)
def test_peel_worked_example(tol, beta, feasible, gammas):
    witness = spectral_service.peel([4, 2, 2, 1], beta, tol)
    assert witness.feasible is feasible
    if gammas is not None:
        np.testing.assert_allclose(witness.gammas, gammas)
        assert witness.reconstruct(beta) == pytest.approx([4, 2, 2, 1])


def test_peel_size_mismatch_fails_at_step_zero(tol):
    witness = spectral_service.peel([4, 2, 2, 1], [2, 1, 1], tol)
    assert witness.failure_step == 0
    assert witness.to_dict()["failure_step"] == 0


def test_peel_reports_failing_step(tol):
    witness = spectral_service.peel([4, 2, 2, 1], [1, 1], tol)
    # gamma = 4 asks for {4, 4}; only one 4 is present
    assert witness.failure_step == 1
    assert witness.gammas == []


def test_peel_rejects_empty_or_nonpositive(tol):
    with pytest.raises(PreconditionError):
        spectral_service.peel([], [1], tol)
    with pytest.raises(PreconditionError):
        spectral_service.peel([1, 0], [1], tol)


@given(
    beta=st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=3),
    gammas=st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=3),
)
@settings(max_examples=50, deadline=None)
def test_peel_accepts_any_union_of_scaled_copies(beta, gammas):
    alpha = [g * b for g in gammas for b in beta]
    witness = spectral_service.peel(alpha, beta, Tolerance(abs_eps=1e-9, rel_eps=1e-9))
    assert witness.feasible
    assert witness.ell == len(gammas)
    assert sorted(witness.reconstruct(beta)) == pytest.approx(sorted(alpha))


@given(
    beta=st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=3),
    gammas=st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=3),
    scale=st.sampled_from([0.125, 0.5, 3.0, 7.0]),
    order=st.randoms(use_true_random=False),
)
@settings(max_examples=50, deadline=None)
def test_peel_is_scale_covariant_and_order_free(beta, gammas, scale, order):
    tol = Tolerance(abs_eps=1e-9, rel_eps=1e-9)
    alpha = [g * b for g in gammas for b in beta]
    base = spectral_service.peel(alpha, beta, tol)
    shuffled = list(alpha)
    order.shuffle(shuffled)
    scaled_x = spectral_service.peel([scale * a for a in shuffled], beta, tol)
    scaled_y = spectral_service.peel(alpha, [scale * b for b in beta], tol)
    assert base.feasible and scaled_x.feasible and scaled_y.feasible
    assert scaled_x.gammas == pytest.approx([scale * g for g in base.gammas])
    assert scaled_y.gammas == pytest.approx([g / scale for g in base.gammas])


@pytest.mark.parametrize(
    "alpha, beta",
    [
        ([4, 2, 2, 1], [2, 1]),
        ([4, 2, 2, 1], [2, 1, 1]),
        ([4, 2, 2, 1], [2, 0.5]),
        ([4, 2, 2, 1], [1, 1]),
        ([3, 3], [1]),
        ([2, 1], [1]),
        ([6, 3, 2, 1], [3, 1]),
        ([5, 4, 3], [1]),
    ],
)
def test_cross_pair_with_itself_agrees_with_peel(tol, alpha, beta):
    X = diagonal_state(alpha, 4, 4)
    Y = diagonal_state(beta, 4, 4)
    peel = spectral_service.peel(alpha, beta, tol)
    check = spectral_service.cross_pair_test(X, X, Y, Y, tol, labels=(1, 1))
    assert check.passed is peel.feasible
    if peel.feasible:
        assert sorted(abs(g) for g in check.value) == pytest.approx(sorted(g ** 2 for g in peel.gammas))


def test_rank_divisibility(tol):
    X = diagonal_state([0.8, 0.4, 0.4, 0.2], 4, 4)
    Y = diagonal_state([0.8, 0.6], 4, 4)
    check = spectral_service.rank_divisibility(X, Y, tol)
    assert check.outcome is Outcome.PASS
    assert check.value == 2

    X3 = diagonal_state([0.8, 0.48, 0.36], 4, 4)
    assert spectral_service.rank_divisibility(X3, Y, tol).impossible

    with pytest.raises(ZeroMatrixError):
        spectral_service.rank_divisibility(X, np.zeros((4, 4)), tol)


def test_ancilla_bound():
    assert spectral_service.ancilla_bound(2, 1, 2).impossible
    assert spectral_service.ancilla_bound(2, 2, 2).passed
    assert spectral_service.ancilla_bound(1, 1, 1).passed


def test_majorization(tol):
    h = 1 / np.sqrt(2)
    assert spectral_service.majorization([h, h], [1.0], tol)
    assert not spectral_service.majorization([1.0], [h, h], tol)


def test_profile_sorted_by_magnitude_then_phase():
    profile = SpectralProfile([1j, 2, -1, 0.5])
    assert profile.values.tolist() == [2, 1j, -1, 0.5]


def test_cross_pair_section3_is_impossible(load_fixture, tol):
    problem = load_fixture("sec3_joint")
    X1, X2 = problem.X_list
    Y1, Y2 = problem.Y_list
    check = spectral_service.cross_pair_test(X1, X2, Y1, Y2, tol)
    assert check.impossible
    assert check.witness["pair"] == [1, 2]
    mags = sorted((abs(complex(*z)) if isinstance(z, list) else abs(z) for z in check.witness["x_eigenvalues"]),
                  reverse=True)
    assert mags == pytest.approx([0.384, 0.384, 0.096, 0.096], abs=1e-9)


def test_cross_pair_passes_for_local_unitaries(rng, tol):
    problem = local_unitary_problem(3, 3, 2, rng)
    X1, X2 = problem.X_list
    Y1, Y2 = problem.Y_list
    check = spectral_service.cross_pair_test(X1, X2, Y1, Y2, tol)
    assert check.outcome is Outcome.PASS
    assert check.witness["ell"] == 1
    gamma = complex(*check.witness["gammas"][0])
    assert gamma == pytest.approx(1.0, abs=1e-6)


def test_partition_search_respects_cap(tol):
    service = SpectralService(partition_cap=2)
    with pytest.raises(SizeLimitError):
        service.partition_search([1, 1, 1, 1], [1, 1], tol)


def test_partition_search_finds_complex_gammas(tol):
    ys = [1.0, 0.5j]
    gammas = [2.0, -1.0]
    xs = [g * y for g in gammas for y in ys]
    found = spectral_service.partition_search(xs, ys, tol)
    assert found is not None
    assert sorted(found, key=abs) == pytest.approx(sorted(gammas, key=abs))
