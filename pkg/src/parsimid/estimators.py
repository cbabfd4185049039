"""Range-space estimators for the extended observability matrix.

Four methods estimate the product of the extended observability matrix and
the past-data controllability map from the same data blocks:

* ``parsim_ols``  - a bank of f ordinary least-squares row fits that keeps
  the causal (lower-triangular) structure of the input Toeplitz term.
* ``parsim_wls``  - the same bank with each row solved by weighted least
  squares.  Rewriting the stacked noise term H_fi E_i as a single white
  row times a banded Toeplitz factor T gives the row noise covariance
  sigma_e^2 T'T, whose inverse is the optimal (BLUE) weighting.
* ``classical_projection`` - the single-projection estimator that removes
  the future input by orthogonal projection and regresses on the past.
* ``ssarx_estimate`` - predictor-form estimator that subtracts the effect
  of future inputs and outputs using pre-estimated predictor Markov
  parameters, then regresses on the past (Jansson-style SSARX).

All least-squares solves use rank-revealing factorizations with the
machine-epsilon * max-dimension * largest-singular-value cutoff, i.e.
pseudo-inverse semantics.  Noise-free records make the output-side rows
exactly collinear; the minimum-norm solution is the intended one there,
so only input-side rank deficiencies raise excitation errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .arx_pre import InnovationsMarkov, PredictorMarkov
from .data_blocks import DataBlocks, orth_projection_complement
from .errors import ConfigError, ExcitationError, RankError

__all__ = [
    "NoiseToeplitz",
    "RangeEstimate",
    "build_noise_toeplitz",
    "toeplitz_gram_band",
    "parsim_ols",
    "parsim_wls",
    "classical_projection",
    "ssarx_estimate",
    "METHODS",
]

METHODS = ("parsim", "parsim_opt", "classical", "ssarx")


@dataclass(frozen=True)
class RangeEstimate:
    """Stacked estimate of the observability/controllability product.

    Attributes:
        gamma_lp: (f, 2p) stack; innovations-form methods estimate
            Gamma_f L_p, the SSARX path estimates the predictor-form
            product.
        g_rows: One row per future index i with the i estimated Markov
            parameters [G_{i-1}, ..., G_1, G_0]; empty for the classical
            projection, predictor-form values for SSARX.
        method_tag: One of ``METHODS``.
    """

    gamma_lp: np.ndarray
    g_rows: tuple[np.ndarray, ...]
    method_tag: str
    f: int
    p: int

    def __post_init__(self):
        if self.method_tag not in METHODS:
            raise ConfigError(f"unknown method tag {self.method_tag!r}")
        if self.gamma_lp.shape != (self.f, 2 * self.p):
            raise ConfigError(
                f"gamma_lp must have shape ({self.f}, {2 * self.p}), got {self.gamma_lp.shape}"
            )
        for i, row in enumerate(self.g_rows, start=1):
            if row.size != i:
                raise ConfigError(f"g_rows[{i - 1}] must have {i} entries, got {row.size}")


@dataclass(frozen=True)
class NoiseToeplitz:
    """Banded factor T mapping a white innovations row onto one noise row.

    Column j of T carries [H_{i-1}, ..., H_1, H_0] in rows j..j+i-1 with
    H_0 = 1, so that (stacked Markov row) @ (innovations Hankel) equals
    (innovations row) @ T.
    """

    T: np.ndarray
    band: np.ndarray
    i: int
    N: int


def _band_from_h(h, i: int) -> np.ndarray:
    """Column band [H_{i-1}, ..., H_1, H_0]; missing high lags count as 0."""
    h = np.asarray(h, dtype=float).ravel()
    band = np.zeros(i)
    band[-1] = 1.0
    avail = min(i - 1, h.size)
    for j in range(1, avail + 1):
        band[i - 1 - j] = h[j - 1]
    return band


def build_noise_toeplitz(h, i: int, N: int) -> NoiseToeplitz:
    """Dense (N + i - 1) x N Toeplitz noise factor for row i.

    Args:
        h: Innovations Markov parameters [H_1, H_2, ...]; needs at least
            i - 1 entries (H_0 = 1 is implicit).
        i: Row index / band width, >= 1.
        N: Number of data columns.

    Raises:
        ConfigError: If fewer than i - 1 Markov parameters are supplied.
    """
    if i < 1 or N < 1:
        raise ConfigError(f"i and N must be >= 1, got i={i}, N={N}")
    h = np.asarray(h, dtype=float).ravel()
    if h.size < i - 1:
        raise ConfigError(f"need at least {i - 1} Markov parameters for row {i}, got {h.size}")
    band = _band_from_h(h, i)
    T = np.zeros((N + i - 1, N))
    cols = np.arange(N)
    for r in range(i):
        T[cols + r, cols] = band[r]
    return NoiseToeplitz(T=T, band=band, i=i, N=N)


def toeplitz_gram_band(h, i: int, N: int) -> np.ndarray:
    """Upper-banded storage of T'T for :func:`scipy.linalg.solveh_banded`.

    T'T is symmetric positive definite, banded with bandwidth i - 1, and
    Toeplitz: diagonal d holds sum_{m=d..i-1} H_m H_{m-d}.
    """
    band = _band_from_h(h, i)
    b_nat = band[::-1]  # [H_0, H_1, ..., H_{i-1}]
    ab = np.empty((i, N))
    for d in range(i):
        ab[i - 1 - d, :] = b_nat[d:] @ b_nat[: i - d]
    return ab


def _check_excitation(blocks: DataBlocks) -> None:
    """Persistent excitation of order f + p: the input Hankel must have full row rank."""
    stack = np.vstack([blocks.U_p, blocks.U_f])
    rank = np.linalg.matrix_rank(stack)
    if rank < blocks.f + blocks.p:
        raise ExcitationError(
            f"input is not persistently exciting of order {blocks.f + blocks.p} (rank {rank})"
        )


def _lstsq_min_norm(Z: np.ndarray, y: np.ndarray) -> np.ndarray:
    theta, _, _, _ = np.linalg.lstsq(Z.T, y, rcond=None)
    return theta


def parsim_ols(blocks: DataBlocks) -> RangeEstimate:
    """Row-wise ordinary least-squares bank.

    Row i regresses future output row i on [Z_p; U_i], estimating
    [Gamma_fi L_p, G_fi] jointly; stacking the f first parts gives the
    range-space estimate.

    Raises:
        ExcitationError: If the input Hankel of order f + p is rank
            deficient (named with the offending row when detected there).
    """
    _check_excitation(blocks)
    f, p = blocks.f, blocks.p
    gamma = np.empty((f, 2 * p))
    g_rows = []
    for i in range(1, f + 1):
        Z = np.vstack([blocks.Z_p, blocks.U_f[:i]])
        try:
            theta = _lstsq_min_norm(Z, blocks.Y_f[i - 1])
        except np.linalg.LinAlgError as err:
            raise ExcitationError(f"least-squares failure at row {i}: {err}") from err
        gamma[i - 1] = theta[: 2 * p]
        g_rows.append(theta[2 * p :])
    return RangeEstimate(gamma_lp=gamma, g_rows=tuple(g_rows), method_tag="parsim", f=f, p=p)


def parsim_wls(blocks: DataBlocks, h) -> RangeEstimate:
    """Row-wise weighted least-squares bank.

    Uses the inverse of the row noise covariance T'T as the weighting;
    the innovations variance cancels and is never applied.  The weighted
    products Z W Z' and y W Z' are computed through banded Cholesky
    solves with T'T (bandwidth i), never by forming the N x N inverse.
    Row 1 has white row noise and coincides with the OLS row.

    Args:
        blocks: Data blocks.
        h: InnovationsMarkov (or a plain sequence) supplying H_1..H_{f-1};
            parameters beyond the available length are treated as zero.

    Raises:
        ExcitationError: As for :func:`parsim_ols`.
        RankError: If a banded Gram solve fails (guarded; cannot occur for
            finite weights since H_0 = 1).
    """
    _check_excitation(blocks)
    h_arr = h.h if isinstance(h, InnovationsMarkov) else np.asarray(h, dtype=float).ravel()
    f, p, N = blocks.f, blocks.p, blocks.N
    gamma = np.empty((f, 2 * p))
    g_rows = []
    for i in range(1, f + 1):
        Z = np.vstack([blocks.Z_p, blocks.U_f[:i]])
        y = blocks.Y_f[i - 1]
        if i == 1:
            theta = _lstsq_min_norm(Z, y)
        else:
            ab = toeplitz_gram_band(h_arr, i, N)
            try:
                V = solveh_banded(ab, Z.T)  # (N, q) = (T'T)^(-1) Z'
            except np.linalg.LinAlgError as err:
                raise RankError(f"noise weighting Gram is numerically singular at row {i}: {err}") from err
            A_w = Z @ V
            b_w = y @ V
            theta, _, _, _ = np.linalg.lstsq(A_w, b_w, rcond=None)
        gamma[i - 1] = theta[: 2 * p]
        g_rows.append(theta[2 * p :])
    return RangeEstimate(gamma_lp=gamma, g_rows=tuple(g_rows), method_tag="parsim_opt", f=f, p=p)


def classical_projection(blocks: DataBlocks) -> RangeEstimate:
    """Single-projection estimator.

    Projects the future input out of the future outputs, then regresses on
    the projected past stack.  The input Toeplitz term is discarded by the
    projection, so no Markov parameter rows are produced.
    """
    proj = orth_projection_complement(blocks.U_f)
    Yf_perp = proj.apply(blocks.Y_f)
    Zp_perp = proj.apply(blocks.Z_p)
    G = Zp_perp @ Zp_perp.T
    R = Yf_perp @ Zp_perp.T
    sol, _, _, _ = np.linalg.lstsq(G, R.T, rcond=None)
    return RangeEstimate(
        gamma_lp=sol.T, g_rows=(), method_tag="classical", f=blocks.f, p=blocks.p
    )


def ssarx_estimate(blocks: DataBlocks, pm: PredictorMarkov) -> RangeEstimate:
    """Predictor-form estimator with ARX pre-subtraction.

    Builds the lower-triangular Toeplitz matrices of predictor Markov
    parameters from ``pm`` (feedthrough fixed to 0, zero diagonal on the
    output-feedback factor), removes their contribution from the future
    outputs, and regresses the corrected outputs on the past stack.  The
    result estimates the predictor-form observability product, and
    ``g_rows`` holds the predictor-form input parameters used.

    Raises:
        ConfigError: If ``pm`` supplies fewer than f - 1 parameters.
        ExcitationError: On input excitation failure.
    """
    f, p = blocks.f, blocks.p
    if pm.n < f - 1:
        raise ConfigError(f"need at least {f - 1} predictor Markov parameters, got {pm.n}")
    _check_excitation(blocks)

    G_bar = np.zeros((f, f))
    H_bar = np.zeros((f, f))
    for r in range(f):
        for c in range(r):
            G_bar[r, c] = pm.g_bar[r - c - 1]
            H_bar[r, c] = pm.h_bar[r - c - 1]
    Y_tilde = blocks.Y_f - G_bar @ blocks.U_f - H_bar @ blocks.Y_f

    G = blocks.Z_p @ blocks.Z_p.T
    R = Y_tilde @ blocks.Z_p.T
    sol, _, _, _ = np.linalg.lstsq(G, R.T, rcond=None)
    g_rows = tuple(
        np.append(pm.g_bar[: i - 1][::-1], 0.0) for i in range(1, f + 1)
    )
    return RangeEstimate(gamma_lp=sol.T, g_rows=g_rows, method_tag="ssarx", f=f, p=p)
