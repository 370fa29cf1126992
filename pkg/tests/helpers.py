"""Random instances with a known answer."""

from typing import Tuple

import numpy as np

from infrastructure.linalg import haar_unitary
from services.channel_service import KrausChannelPair
from services.states import BipartiteState, MixedInputProblem, TransformProblem


def random_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian m x n matrix with unit Frobenius norm."""
    X = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return X / np.linalg.norm(X)


def local_unitary_problem(m: int, n: int, k: int, rng: np.random.Generator,
                          p_max: int = 1, q_max: int = 1) -> TransformProblem:
    """
    Pairs X_i -> F X_i G^t for one fixed pair of unitaries (F, G).

    The map is itself a local unitary channel, so every such problem is
    feasible with p = q = 1.
    """
    F = haar_unitary(m, rng)
    G = haar_unitary(n, rng)
    Xs = [random_matrix(m, n, rng) for _ in range(k)]
    Ys = [F @ X @ G.T for X in Xs]
    return TransformProblem.from_matrices(Xs, Ys, p_max=p_max, q_max=q_max, name="local_unitary")


def diagonal_state(values, m: int, n: int) -> np.ndarray:
    """Matrix form with the given Schmidt coefficients on the diagonal."""
    X = np.zeros((m, n), dtype=complex)
    for t, s in enumerate(values):
        X[t, t] = s
    return X


def constructed_feasible_problem(m_sub: int, n_sub: int, ell: int, k: int, rng: np.random.Generator
                                 ) -> Tuple[TransformProblem, KrausChannelPair]:
    """
    X_i = U0 (R_i (x) Y'_i) V0 and Y_i = U1 (E11 (x) Y'_i) V1 with random R_i of rank ell.

    The channel that undoes (U0, V0), discards the ell-dimensional register on
    both sides, resets it to e_1 and applies (U1, V1) is local; its Kraus
    family is returned with the problem. Bounds are p_max = q_max = ell.
    """
    m, n = ell * m_sub, ell * n_sub
    U0, U1 = haar_unitary(m, rng), haar_unitary(m, rng)
    V0, V1 = haar_unitary(n, rng), haar_unitary(n, rng)
    E11 = np.zeros((ell, ell))
    E11[0, 0] = 1.0
    Xs, Ys = [], []
    for _ in range(k):
        R = random_matrix(ell, ell, rng)
        Y_sub = random_matrix(m_sub, n_sub, rng)
        Xs.append(U0 @ np.kron(R, Y_sub) @ V0)
        Ys.append(U1 @ np.kron(E11, Y_sub) @ V1)

    e = np.eye(ell)
    F_list = [U1 @ np.kron(np.outer(e[0], e[a]), np.eye(m_sub)) @ U0.conj().T for a in range(ell)]
    G_list = [V1.T @ np.kron(np.outer(e[0], e[b]), np.eye(n_sub)) @ V0.conj() for b in range(ell)]
    problem = TransformProblem.from_matrices(Xs, Ys, p_max=ell, q_max=ell, name="constructed")
    return problem, KrausChannelPair(F_list, G_list)


def mixed_ensemble(feasible: bool, rng: np.random.Generator, inputs: int = 2, components: int = 2
                   ) -> Tuple[MixedInputProblem, TransformProblem]:
    """
    Mixed inputs of ``components`` pure states each, plus the pure problem of
    their normalized components.

    Feasible ensembles use X_ij = U0 (R_ij (x) Y'_i) V0 with a shared (U0, V0),
    which one local channel sends to Y_i = U1 (E11 (x) Y'_i) V1. Otherwise
    every state is random.
    """
    ell, m_sub, n_sub = 2, 1, 2
    m, n = ell * m_sub, ell * n_sub
    U0, U1 = haar_unitary(m, rng), haar_unitary(m, rng)
    V0, V1 = haar_unitary(n, rng), haar_unitary(n, rng)
    E11 = np.zeros((ell, ell))
    E11[0, 0] = 1.0
    mixed, outputs, Xs, Ys = [], [], [], []
    for _ in range(inputs):
        Y_sub = random_matrix(m_sub, n_sub, rng)
        Y = U1 @ np.kron(E11, Y_sub) @ V1 if feasible else random_matrix(m, n, rng)
        Y = Y / np.linalg.norm(Y)
        weights = rng.dirichlet(np.ones(components))
        comps = []
        for w in weights:
            X = U0 @ np.kron(random_matrix(ell, ell, rng), Y_sub) @ V0 if feasible else random_matrix(m, n, rng)
            X = X / np.linalg.norm(X)
            comps.append(np.sqrt(w) * X.reshape(-1))
            Xs.append(X)
            Ys.append(Y)
        mixed.append(tuple(comps))
        outputs.append(BipartiteState.from_matrix(Y))
    bounds = {"p_max": ell, "q_max": ell}
    problem = MixedInputProblem(tuple(mixed), tuple(outputs), **bounds)
    return problem, TransformProblem.from_matrices(Xs, Ys, **bounds)
