"""Shared oracle helpers for the test suite.

These build the reference quantities (observability stacks, past-data
controllability maps, Markov Toeplitz blocks) directly from model matrices,
independently of the library's estimation code paths.
"""

import numpy as np

from parsimid import StateSpaceModel, to_predictor_form


def gamma_f(A, C, f):
    """Observability stack [C; CA; ...; CA^(f-1)]."""
    rows = [np.atleast_2d(C)[0]]
    for _ in range(f - 1):
        rows.append(rows[-1] @ A)
    return np.array(rows)


def l_p(A_bar, B_bar, K, p):
    """Past-data map [A_bar^(p-1) K, ..., K, A_bar^(p-1) B_bar, ..., B_bar]."""
    cols_y, cols_u = [], []
    My, Mu = np.array(K, dtype=float), np.array(B_bar, dtype=float)
    for _ in range(p):
        cols_y.append(My.copy())
        cols_u.append(Mu.copy())
        My = A_bar @ My
        Mu = A_bar @ Mu
    return np.hstack([np.hstack(cols_y[::-1]), np.hstack(cols_u[::-1])])


def true_gamma_lp(m: StateSpaceModel, f: int, p: int):
    pred = to_predictor_form(m)
    return gamma_f(m.A, m.C, f) @ l_p(pred.A_bar, pred.B_bar, pred.K, p)


def toeplitz_gf(m: StateSpaceModel, f: int):
    """Lower-triangular input Toeplitz block [[D, 0, ...], [CB, D, ...], ...]."""
    G = np.zeros((f, f))
    d = m.D[0, 0]
    markov = [(m.C @ np.linalg.matrix_power(m.A, j) @ m.B).item() for j in range(f)]
    for r in range(f):
        G[r, r] = d
        for c in range(r):
            G[r, c] = markov[r - c - 1]
    return G


def colspace(M, rank):
    """Orthonormal basis of the leading column space, for angle comparisons."""
    U, _, _ = np.linalg.svd(np.asarray(M, dtype=float), full_matrices=False)
    return U[:, :rank]


def random_stable_model(rng, n_x, rho_range=(0.3, 0.95), k_scale=0.3):
    """Random stable SISO innovations-form model for property tests."""
    A0 = rng.standard_normal((n_x, n_x))
    rho = np.max(np.abs(np.linalg.eigvals(A0)))
    A = A0 * (rng.uniform(*rho_range) / rho)
    return StateSpaceModel(
        A=A,
        B=rng.standard_normal((n_x, 1)),
        C=rng.standard_normal((1, n_x)),
        D=0.0,
        K=k_scale * rng.standard_normal((n_x, 1)),
        sigma_e2=1.0,
    )
