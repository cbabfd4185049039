"""Model realization from a range-space estimate, and the identify pipeline.

The weighted singular value decomposition compresses the stacked estimate
to its leading rank-n_x part; the observability factor U S^(1/2) then
yields (A, C) by shift invariance, and (B, K) follow from linear fits to
estimated Markov parameters.  The SSARX path realizes the predictor-form
matrices and converts back to innovations form at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arx_pre import (
    MIN_SAMPLES_PER_ORDER,
    InnovationsMarkov,
    fit_arx,
    predictor_to_innovations,
    predictor_to_innovations_g,
)
from .data_blocks import DataBlocks, assemble_blocks, orth_projection_complement
from .errors import ConfigError, ParsimidError, RankError
from .estimators import (
    METHODS,
    RangeEstimate,
    classical_projection,
    parsim_ols,
    parsim_wls,
    ssarx_estimate,
)
from .ss_model import (
    PredictorModel,
    SignalRecord,
    StateSpaceModel,
    from_predictor_form,
    is_stable,
    spectral_radius,
)

__all__ = [
    "RealizationConfig",
    "IdentifiedModel",
    "psd_sqrt",
    "weight_w2",
    "weighted_svd_realize",
    "extract_ac",
    "estimate_bk",
    "identify",
]

W2_MODES = ("zp_projected", "identity")

# The noise-weighting pre-estimate needs a genuinely high-order ARX: with a
# slowly decaying predictor, an ARX truncated at the (often short) past
# horizon biases the leading Markov parameters enough to cancel the variance
# gain of the weighted bank.  The weighting fit therefore uses at least this
# order when the record allows it.
WEIGHTING_ORDER_CAP = 30


@dataclass(frozen=True)
class RealizationConfig:
    """Settings for one identification run.

    Attributes:
        n_x: Target model order, 1 <= n_x <= f - 1.
        f: Future horizon, >= 2.
        p: Past horizon (also the ARX pre-estimation order).
        method: One of "parsim", "parsim_opt", "classical", "ssarx".
        w2_mode: Column weighting for the SVD step: "zp_projected" uses
            the square root of the projected past Gram matrix,
            "identity" disables the weighting.  The row weighting is
            always the identity.
    """

    n_x: int
    f: int
    p: int
    method: str = "parsim_opt"
    w2_mode: str = "zp_projected"

    def __post_init__(self):
        if self.f < 2:
            raise ConfigError(f"future horizon must be >= 2, got {self.f}")
        if not 1 <= self.n_x <= self.f - 1:
            raise ConfigError(
                f"model order must satisfy 1 <= n_x <= f - 1, got n_x={self.n_x}, f={self.f}"
            )
        if self.p < 1:
            raise ConfigError(f"past horizon must be >= 1, got {self.p}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.w2_mode not in W2_MODES:
            raise ConfigError(f"unknown w2_mode {self.w2_mode!r}; expected one of {W2_MODES}")


@dataclass(frozen=True)
class IdentifiedModel:
    """Result of :func:`identify`: the model plus diagnostics."""

    model: StateSpaceModel
    singular_values: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def psd_sqrt(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Principal symmetric square root of a positive semidefinite matrix.

    Eigenvalues below -tol (relative to the largest eigenvalue, floor 1)
    are an error; small negatives inside the tolerance are clamped to 0.

    Raises:
        RankError: If the input is indefinite beyond tolerance.
    """
    M = np.asarray(M, dtype=float)
    sym = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(sym)
    scale = max(1.0, float(w[-1]) if w.size else 1.0)
    if w.size and w[0] < -tol * scale:
        raise RankError(f"matrix is indefinite: smallest eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def weight_w2(blocks: DataBlocks) -> np.ndarray:
    """Column weighting: square root of the projected past Gram matrix.

    Returns the principal symmetric square root of
    Z_p P Z_p' where P projects onto the orthogonal complement of the
    future-input rows.
    """
    proj = orth_projection_complement(blocks.U_f)
    Zp_perp = proj.apply(blocks.Z_p)
    return psd_sqrt(Zp_perp @ Zp_perp.T)


def weighted_svd_realize(
    est: RangeEstimate,
    cfg: RealizationConfig,
    w2: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Rank-n_x observability factor from the weighted SVD.

    Args:
        est: Stacked range-space estimate.
        cfg: Realization settings; cfg.n_x many directions are kept.
        w2: Column weighting matrix (required when cfg.w2_mode is
            "zp_projected"; ignored for "identity").

    Returns:
        (Gamma_hat, singular_values): Gamma_hat = U_nx sqrt(S_nx) of shape
        (f, n_x), and the full singular spectrum for diagnostics.

    Raises:
        RankError: If n_x exceeds the numerical rank of the weighted
            matrix; the message lists the spectrum.
        ConfigError: If the required weighting matrix is missing.
    """
    if cfg.w2_mode == "zp_projected":
        if w2 is None:
            raise ConfigError("w2_mode 'zp_projected' requires the weighting matrix")
        M = est.gamma_lp @ w2
    else:
        M = est.gamma_lp
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    tol = np.finfo(float).eps * max(M.shape) * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if cfg.n_x > rank:
        raise RankError(
            f"requested order {cfg.n_x} exceeds numerical rank {rank}; singular values: {s}"
        )
    Gamma_hat = U[:, : cfg.n_x] * np.sqrt(s[: cfg.n_x])
    return Gamma_hat, s


def extract_ac(Gamma_hat: np.ndarray, n_x: int) -> tuple[np.ndarray, np.ndarray]:
    """(A, C) from the shift structure of the observability factor.

    C is the first block row; A solves Gamma[:-1] A = Gamma[1:] in the
    least-squares sense.

    Raises:
        ConfigError: If the factor has fewer than n_x + 1 rows.
        RankError: If the top block is column-rank deficient.
    """
    G = np.asarray(Gamma_hat, dtype=float)
    if G.ndim != 2 or G.shape[1] != n_x:
        raise ConfigError(f"observability factor must have {n_x} columns, got {G.shape}")
    if G.shape[0] < n_x + 1:
        raise ConfigError(
            f"need at least n_x + 1 = {n_x + 1} block rows for the shift, got {G.shape[0]}"
        )
    top = G[:-1]
    bot = G[1:]
    A, _, rank, _ = np.linalg.lstsq(top, bot, rcond=None)
    if rank < n_x:
        raise RankError(f"top block of the observability factor has rank {rank} < {n_x}")
    return A, G[:1].copy()


def _fit_markov_gain(A: np.ndarray, C: np.ndarray, observations) -> tuple[np.ndarray, float]:
    """Least-squares gain X from observations value ~= C A^(lag-1) X.

    ``observations`` is an iterable of (lag, value) pairs with lag >= 1.
    Returns the gain column and the fit RMS.
    """
    obs = sorted(observations, key=lambda t: t[0])
    if not obs:
        raise ConfigError("no Markov-parameter observations to fit a gain from")
    n_x = A.shape[0]
    max_lag = obs[-1][0]
    powers = np.empty((max_lag, n_x))
    row = C[0].copy()
    for j in range(max_lag):
        powers[j] = row
        row = row @ A
    R = np.vstack([powers[lag - 1] for lag, _ in obs])
    t = np.array([val for _, val in obs])
    gain, _, rank, _ = np.linalg.lstsq(R, t, rcond=None)
    if rank < n_x:
        raise RankError(
            f"observability stack has rank {rank} < {n_x}: (A, C) pair is not observable enough"
        )
    rms = float(np.sqrt(np.mean((R @ gain - t) ** 2)))
    return gain.reshape(-1, 1), rms


def estimate_bk(
    A: np.ndarray,
    C: np.ndarray,
    est: RangeEstimate,
    h: InnovationsMarkov,
) -> tuple[np.ndarray, np.ndarray]:
    """(B, K) by linear fits to estimated Markov parameters, with D = 0.

    B fits every lag >= 1 entry of the bank's Markov rows (falling back to
    the input-channel sequence carried by ``h`` when the bank produced no
    rows); K fits the innovations-channel sequence.

    Raises:
        RankError: If the observability stack of (A, C) is rank deficient.
        ConfigError: If no input-channel Markov information is available.
    """
    b_obs = []
    for i, row in enumerate(est.g_rows, start=1):
        for m, value in enumerate(row):
            lag = i - 1 - m
            if lag >= 1:
                b_obs.append((lag, float(value)))
    if not b_obs:
        if h.g is None:
            raise ConfigError(
                "no input Markov information: the estimate has no rows and h carries no g sequence"
            )
        b_obs = [(j, float(v)) for j, v in enumerate(h.g, start=1)]
    B, _ = _fit_markov_gain(A, C, b_obs)
    K, _ = _fit_markov_gain(A, C, [(j, float(v)) for j, v in enumerate(h.h, start=1)])
    return B, K


def _weighting_markov(rec: SignalRecord, p: int, pm) -> InnovationsMarkov:
    """Innovations Markov sequence for the WLS weighting.

    Refits the ARX at the larger of ``p`` and the high-order cap when the
    record supports it; otherwise reuses the horizon-order fit.
    """
    n_w = max(p, min(WEIGHTING_ORDER_CAP, len(rec) // MIN_SAMPLES_PER_ORDER))
    pm_w = pm if n_w == p else fit_arx(rec, n_w)
    return predictor_to_innovations(pm_w)


def _stage(name: str):
    """Context manager labeling errors with the pipeline stage."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is None:
                return False
            if isinstance(exc, ParsimidError):
                raise type(exc)(f"{name}: {exc}") from exc
            if isinstance(exc, np.linalg.LinAlgError):
                raise RankError(f"{name}: {exc}") from exc
            return False

    return _Ctx()


def identify(
    rec: SignalRecord,
    cfg: RealizationConfig,
    weighting_markov: InnovationsMarkov | None = None,
) -> IdentifiedModel:
    """End-to-end identification of one record.

    Pipeline: data blocks -> high-order ARX pre-estimation (order p) ->
    range-space estimate by the configured method -> weighted SVD ->
    shift-invariance (A, C) -> Markov-parameter fits for (B, K).  The
    predictor gain always reuses the ARX sequence, and the feedthrough is
    fixed to zero.  For the SSARX method the realization runs on
    predictor-form quantities and the final model is converted back to
    innovations form.

    Args:
        rec: Input/output record.
        cfg: Realization settings.
        weighting_markov: Optional override for the Markov parameters that
            drive the WLS weighting (parsim_opt only); defaults to the
            ARX-estimated sequence.

    Returns:
        IdentifiedModel.  An unstable estimate is not an error; it is
        flagged in ``diagnostics["stable"]``.

    Raises:
        ParsimidError subclasses labeled with the failing stage.
    """
    with _stage("blocks"):
        blocks = assemble_blocks(rec, cfg.f, cfg.p)
    with _stage("arx"):
        pm = fit_arx(rec, cfg.p)
        innov = InnovationsMarkov(
            h=predictor_to_innovations(pm).h,
            g=predictor_to_innovations_g(pm),
        )

    with _stage("estimate"):
        if cfg.method == "parsim":
            est = parsim_ols(blocks)
        elif cfg.method == "parsim_opt":
            if weighting_markov is None:
                weighting_markov = _weighting_markov(rec, cfg.p, pm)
            est = parsim_wls(blocks, weighting_markov)
        elif cfg.method == "classical":
            est = classical_projection(blocks)
        else:
            est = ssarx_estimate(blocks, pm)

    with _stage("svd"):
        w2 = weight_w2(blocks) if cfg.w2_mode == "zp_projected" else None
        Gamma_hat, svals = weighted_svd_realize(est, cfg, w2)

    with _stage("shift"):
        A_like, C_hat = extract_ac(Gamma_hat, cfg.n_x)
        shift_rms = float(
            np.sqrt(np.mean((Gamma_hat[:-1] @ A_like - Gamma_hat[1:]) ** 2))
        )

    with _stage("gains"):
        if cfg.method == "ssarx":
            # A_like is the predictor-form transition matrix here.
            K_hat, k_rms = _fit_markov_gain(
                A_like, C_hat, [(j, float(v)) for j, v in enumerate(pm.h_bar, start=1)]
            )
            B_bar, b_rms = _fit_markov_gain(
                A_like, C_hat, [(j, float(v)) for j, v in enumerate(pm.g_bar, start=1)]
            )
            model = from_predictor_form(
                PredictorModel(
                    A_bar=A_like, B_bar=B_bar, C=C_hat, D=0.0, K=K_hat,
                    sigma_e2=pm.residual_variance,
                )
            )
        else:
            B_hat, K_hat = estimate_bk(A_like, C_hat, est, innov)
            b_rms = k_rms = float("nan")
            model = StateSpaceModel(
                A=A_like, B=B_hat, C=C_hat, D=0.0, K=K_hat,
                sigma_e2=pm.residual_variance,
            )

    tail = float(np.sum(svals[cfg.n_x :]) / np.sum(svals)) if np.sum(svals) > 0 else 0.0
    diagnostics = {
        "method": cfg.method,
        "f": cfg.f,
        "p": cfg.p,
        "stable": is_stable(model),
        "spectral_radius": spectral_radius(model),
        "arx_residual_variance": pm.residual_variance,
        "svd_tail_fraction": tail,
        "shift_residual_rms": shift_rms,
        "b_fit_rms": b_rms,
        "k_fit_rms": k_rms,
        "markov_last_row": est.g_rows[-1].copy() if est.g_rows else None,
    }
    return IdentifiedModel(model=model, singular_values=svals, diagnostics=diagnostics)
