"""Hankel data blocks and the future-input annihilating projector.

Given a record of length ``N_total`` and horizons ``f`` (future) and ``p``
(past), the blocks share N = N_total - f - p + 1 columns.  Column c of a
block collects one window of the record, so entry (r, c) of each block
depends only on r + c (constant anti-diagonals).  The past stack
``Z_p = [Y_p; U_p]`` is the regressor that summarizes the state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, ExcitationError
from .ss_model import SignalRecord

__all__ = [
    "DataBlocks",
    "Projector",
    "build_hankel",
    "assemble_blocks",
    "orth_projection_complement",
]

# Above this many columns the dense N x N projector is no longer materialized;
# use Projector.apply instead.
DENSE_PROJECTOR_LIMIT = 4000


def build_hankel(signal, first_index: int, rows: int, cols: int) -> np.ndarray:
    """Hankel matrix with entry (r, c) = signal[first_index + r + c]."""
    sig = np.asarray(signal, dtype=float).ravel()
    if rows < 1 or cols < 1:
        raise ConfigError(f"rows and cols must be >= 1, got {rows}, {cols}")
    last = first_index + rows + cols - 2
    if first_index < 0 or last >= sig.size:
        raise IndexError(
            f"hankel window [{first_index}, {last}] out of range for signal of length {sig.size}"
        )
    return sliding_window_view(sig, cols)[first_index : first_index + rows].copy()


@dataclass(frozen=True)
class DataBlocks:
    """Past/future Hankel blocks of one record plus row-wise partitions.

    ``Y_fi[i-1]`` is future-output row i (1-based) and ``U_i[i-1]`` stacks
    the first i rows of ``U_f``; both are views into the stored blocks.
    """

    U_p: np.ndarray
    Y_p: np.ndarray
    U_f: np.ndarray
    Y_f: np.ndarray
    Z_p: np.ndarray
    f: int
    p: int
    N: int
    k_origin: int

    @property
    def Y_fi(self) -> tuple[np.ndarray, ...]:
        return tuple(self.Y_f[i] for i in range(self.f))

    @property
    def U_i(self) -> tuple[np.ndarray, ...]:
        return tuple(self.U_f[: i + 1] for i in range(self.f))


def assemble_blocks(rec: SignalRecord, f: int, p: int) -> DataBlocks:
    """Build all data blocks for one record.

    Args:
        rec: Input/output record of length N_total >= f + p.
        f: Future horizon, >= 1.
        p: Past horizon, >= 1.

    Returns:
        DataBlocks with N = N_total - f - p + 1 columns; column 0 of the
        future blocks sits at absolute time ``p`` (k_origin).

    Raises:
        ConfigError: If the record is shorter than f + p.
    """
    if f < 1 or p < 1:
        raise ConfigError(f"horizons must be >= 1, got f={f}, p={p}")
    n_total = len(rec)
    if n_total < f + p:
        raise ConfigError(
            f"record of length {n_total} too short: need at least f + p = {f + p} samples"
        )
    N = n_total - f - p + 1
    U_p = build_hankel(rec.u, 0, p, N)
    Y_p = build_hankel(rec.y, 0, p, N)
    U_f = build_hankel(rec.u, p, f, N)
    Y_f = build_hankel(rec.y, p, f, N)
    Z_p = np.vstack([Y_p, U_p])
    for block in (U_p, Y_p, U_f, Y_f, Z_p):
        block.setflags(write=False)
    return DataBlocks(U_p=U_p, Y_p=Y_p, U_f=U_f, Y_f=Y_f, Z_p=Z_p, f=f, p=p, N=N, k_origin=p)


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto the complement of the U_f row space.

    Stored as an orthonormal basis ``Q`` (columns) of the row space being
    annihilated, so X @ P = X - (X @ Q) @ Q.T can be applied without ever
    forming the N x N matrix.
    """

    basis: np.ndarray

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def P(self) -> np.ndarray:
        """Dense N x N projector; only available for N <= 4000."""
        if self.n > DENSE_PROJECTOR_LIMIT:
            raise ConfigError(
                f"refusing to materialize a {self.n} x {self.n} projector; use apply()"
            )
        return np.eye(self.n) - self.basis @ self.basis.T

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Right-multiply by the projector: returns X @ P."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X - (X @ self.basis) @ self.basis.T


def orth_projection_complement(U_f) -> Projector:
    """Projector annihilating the row space of U_f.

    Computed from an orthogonal decomposition of U_f rather than the
    explicit inverse formula, which is the numerically robust route to
    I - U_f.T (U_f U_f.T)^(-1) U_f.

    Raises:
        ExcitationError: If U_f is row-rank deficient; no silent
            pseudo-inverse fallback is taken.
    """
    U = np.atleast_2d(np.asarray(U_f, dtype=float))
    rows, N = U.shape
    if rows > N:
        raise ConfigError(f"U_f has more rows ({rows}) than columns ({N})")
    _, s, Vt = np.linalg.svd(U, full_matrices=False)
    tol = np.finfo(float).eps * max(U.shape) * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank < rows:
        raise ExcitationError(
            f"future input block is rank deficient ({rank} < {rows}): input is not persistently exciting"
        )
    basis = Vt[:rows].T.copy()
    basis.setflags(write=False)
    return Projector(basis=basis)
