"""Tests for the single-party correlation-matrix criterion."""

import numpy as np
import pytest

from services.gram_service import FEASIBLE, INFEASIBLE, gram_service
from services.problem_service import problem_service
from services.verdicts import Outcome
from utils.errors import DimensionError

e = np.eye(3)
h = 1 / np.sqrt(2)


def test_orthogonal_inputs_go_anywhere(tol):
    check = gram_service.single_party_transformable([e[0], e[1]], [e[0], e[0]], tol)
    assert check.outcome is Outcome.CERTIFIED
    np.testing.assert_allclose(check.value.M, np.eye(2), atol=1e-12)
    assert check.witness["isometry_residual"] < 1e-9


def test_zero_pattern_violation(tol):
    check = gram_service.single_party_transformable([e[0], h * (e[0] + e[1])], [e[0], e[1]], tol)
    assert check.impossible
    assert check.witness["check"] == "zero_pattern"
    assert check.witness["entry"] == [1, 2]


def test_overlap_cannot_shrink_in_magnitude(tol):
    # Identical inputs would need |M_12| = sqrt(2) > 1
    check = gram_service.single_party_transformable([e[0], e[0]], [e[0], h * (e[0] + e[1])], tol)
    assert check.impossible
    assert check.witness["check"] == "forced_submatrix"
    assert check.witness["indices"] == [1, 2]
    assert check.witness["min_eigenvalue"] == pytest.approx(1 - np.sqrt(2))


def test_identity_map_is_certified(rng, tol):
    xs = [v / np.linalg.norm(v) for v in rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))]
    check = gram_service.single_party_transformable(xs, xs, tol)
    assert check.outcome is Outcome.CERTIFIED
    np.testing.assert_allclose(check.value.M, np.ones((3, 3)), atol=1e-9)


def test_free_entries_are_completed(tol):
    # G_Y vanishes on (1,3) and (2,3), so those entries of M are free
    G_X = np.eye(3, dtype=complex)
    G_Y = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]], dtype=complex)
    completion = gram_service.complete_correlation(G_X, G_Y, tol)
    assert completion.status == FEASIBLE
    assert completion.free_pattern == [(0, 2), (1, 2)]
    assert completion.min_eigenvalue >= -tol.psd_eps
    np.testing.assert_allclose(completion.M * G_Y, G_X, atol=1e-9)


def test_forced_infeasible_block_is_reported(tol):
    G_X = np.ones((3, 3), dtype=complex)
    G_Y = np.array([[1, 0.5, 0], [0.5, 1, 0], [0, 0, 1]], dtype=complex)
    zero = gram_service.zero_pattern_check(G_X, G_Y, tol)
    assert zero.impossible
    G_X[0, 2] = G_X[2, 0] = G_X[1, 2] = G_X[2, 1] = 0
    completion = gram_service.complete_correlation(G_X, G_Y, tol)
    assert completion.status == INFEASIBLE
    assert completion.certificate["indices"] == [1, 2]


def test_correlation_factor_reproduces_M(tol):
    M = np.array([[1, 0.5], [0.5, 1]], dtype=complex)
    Z = gram_service.correlation_factor(M, tol)
    np.testing.assert_allclose(Z.conj().T @ Z, M, atol=1e-12)


def test_section3_joint_inputs_reach_outputs_globally(load_fixture, tol):
    problem = load_fixture("sec3_joint")
    xs = [s.amplitudes for s in problem.inputs]
    ys = [s.amplitudes for s in problem.outputs]
    check = gram_service.single_party_transformable(xs, ys, tol)
    assert check.outcome is Outcome.CERTIFIED
    G_X = problem_service.gram_matrix(xs)
    G_Y = problem_service.gram_matrix(ys)
    np.testing.assert_allclose(check.value.M * G_Y, G_X, atol=1e-8)


def test_shape_mismatch(tol):
    with pytest.raises(DimensionError):
        gram_service.zero_pattern_check(np.eye(2), np.eye(3), tol)
    with pytest.raises(DimensionError):
        gram_service.single_party_transformable([e[0]], [e[0], e[1]], tol)


def _best_grid_eigenvalue(a: complex, b: complex, points: int = 81) -> float:
    # Largest lambda_min of [[1, a, z], [a*, 1, b], [z*, b*, 1]] over z on a grid of the unit square
    axis = np.linspace(-1.0, 1.0, points)
    z = (axis[:, None] + 1j * axis[None, :]).ravel()
    M = np.empty((z.size, 3, 3), dtype=complex)
    M[:, 0, 0] = M[:, 1, 1] = M[:, 2, 2] = 1.0
    M[:, 0, 1], M[:, 1, 0] = a, np.conj(a)
    M[:, 1, 2], M[:, 2, 1] = b, np.conj(b)
    M[:, 0, 2], M[:, 2, 0] = z, np.conj(z)
    return float(np.max(np.linalg.eigvalsh(M)[:, 0]))


@pytest.mark.parametrize("seed", range(50))
def test_single_free_entry_matches_grid(seed, tol):
    rng = np.random.default_rng(seed)
    # Keep |a|, |b| away from 1 so the grid answer is unambiguous
    radii = rng.choice([rng.uniform(0.0, 0.95), rng.uniform(1.05, 1.3)], size=2, p=[0.7, 0.3])
    a, b = radii * np.exp(2j * np.pi * rng.uniform(size=2))
    G_Y = np.array([[1, 0.5, 0], [0.5, 1, 0.5], [0, 0.5, 1]], dtype=complex)
    G_X = np.array([[1, 0.5 * a, 0], [0.5 * np.conj(a), 1, 0.5 * b], [0, 0.5 * np.conj(b), 1]])

    completion = gram_service.complete_correlation(G_X, G_Y, tol)
    assert completion.free_pattern == [(0, 2)]
    grid_feasible = _best_grid_eigenvalue(a, b) > -0.02
    assert completion.feasible is grid_feasible
    if grid_feasible:
        assert completion.min_eigenvalue >= -tol.psd_eps
        assert completion.M[0, 1] == pytest.approx(a, abs=1e-9)
        assert completion.M[1, 2] == pytest.approx(b, abs=1e-9)
        assert abs(completion.M[0, 2]) <= 1 + 1e-9
    else:
        assert completion.status == INFEASIBLE
