"""High-order ARX pre-estimation of predictor Markov parameters.

With feedthrough fixed to zero, the predictor form truncated at order n is
the ARX model

    y[k] = sum_{i=1..n} h_bar[i] y[k-i] + sum_{i=1..n} g_bar[i] u[k-i] + e[k]

whose coefficients are the predictor Markov parameters
h_bar[i] = C A_bar^(i-1) K and g_bar[i] = C A_bar^(i-1) B_bar.  A recursion
converts them to the innovations-form parameters H_i = C A^(i-1) K (and
G_i = C A^(i-1) B), which drive the noise weighting of the row-wise
weighted-least-squares bank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ExcitationError
from .ss_model import SignalRecord

__all__ = [
    "PredictorMarkov",
    "InnovationsMarkov",
    "fit_arx",
    "select_order_aic",
    "predictor_to_innovations",
    "predictor_to_innovations_g",
    "default_aic_grid",
]

# Pragmatic floor on data per coefficient; keeps the high-order fit from
# blowing up its variance on short records.
MIN_SAMPLES_PER_ORDER = 10


@dataclass(frozen=True)
class PredictorMarkov:
    """ARX coefficients: predictor Markov parameters plus residual variance."""

    h_bar: np.ndarray
    g_bar: np.ndarray
    residual_variance: float

    def __post_init__(self):
        h = np.array(self.h_bar, dtype=float).ravel()
        g = np.array(self.g_bar, dtype=float).ravel()
        if h.shape != g.shape:
            raise ConfigError("h_bar and g_bar must have equal length")
        if self.residual_variance < 0:
            raise ConfigError("residual_variance must be >= 0")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "h_bar", h)
        object.__setattr__(self, "g_bar", g)
        object.__setattr__(self, "residual_variance", float(self.residual_variance))

    @property
    def n(self) -> int:
        return self.h_bar.size


@dataclass(frozen=True)
class InnovationsMarkov:
    """Innovations-form Markov parameters h[i] = C A^(i-1) K (and optionally g)."""

    h: np.ndarray
    g: np.ndarray | None = None

    def __post_init__(self):
        h = np.array(self.h, dtype=float).ravel()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        if self.g is not None:
            g = np.array(self.g, dtype=float).ravel()
            g.setflags(write=False)
            object.__setattr__(self, "g", g)


def _arx_design(u: np.ndarray, y: np.ndarray, n: int, start: int):
    """Lagged regressor [y lags 1..n | u lags 1..n] and targets from ``start``."""
    total = y.size
    rows = total - start
    Phi = np.empty((rows, 2 * n))
    for j in range(1, n + 1):
        Phi[:, j - 1] = y[start - j : total - j]
        Phi[:, n + j - 1] = u[start - j : total - j]
    return Phi, y[start:]


def _solve_arx(u: np.ndarray, y: np.ndarray, n: int, start: int):
    """Minimum-norm least-squares ARX fit; returns (theta, rss, n_eff)."""
    Phi, t = _arx_design(u, y, n, start)
    # Persistent excitation concerns the input channel only: noise-free
    # records make the output lags exactly collinear with the rest of the
    # regressor, and the minimum-norm solution is still the right answer
    # there.  A deficient input-lag block is a genuine excitation failure.
    if np.linalg.matrix_rank(Phi[:, n:]) < n:
        raise ExcitationError(
            f"input-lag regressor of ARX order {n} is rank deficient: input is not persistently exciting"
        )
    theta, _, _, _ = np.linalg.lstsq(Phi, t, rcond=None)
    r = t - Phi @ theta
    return theta, float(r @ r), t.size


def _check_order(n: int, n_total: int) -> None:
    if n < 1:
        raise ConfigError(f"ARX order must be >= 1, got {n}")
    if n_total < MIN_SAMPLES_PER_ORDER * n:
        raise ConfigError(
            f"record of length {n_total} too short for ARX order {n}: need at least {MIN_SAMPLES_PER_ORDER * n} samples"
        )


def fit_arx(rec: SignalRecord, n: int) -> PredictorMarkov:
    """Least-squares fit of the order-n ARX model (feedthrough fixed to 0).

    Args:
        rec: Data record with at least 10 * n samples.
        n: Model order; also the number of Markov parameters returned.

    Returns:
        PredictorMarkov with h_bar (output-lag coefficients), g_bar
        (input-lag coefficients), and residual_variance
        RSS / (n_eff - 2 n).

    Raises:
        ConfigError: If n is too large for the record.
        ExcitationError: If the input-lag block is rank deficient.
    """
    n_total = len(rec)
    _check_order(n, n_total)
    if n_total - n <= 2 * n:
        raise ConfigError(f"ARX order {n} leaves no degrees of freedom on {n_total} samples")
    theta, rss, n_eff = _solve_arx(rec.u, rec.y, n, start=n)
    return PredictorMarkov(
        h_bar=theta[:n],
        g_bar=theta[n:],
        residual_variance=rss / (n_eff - 2 * n),
    )


def select_order_aic(rec: SignalRecord, grid) -> int:
    """Pick the ARX order from ``grid`` by the Akaike criterion.

    Every candidate is fitted on the common window starting at the largest
    grid order so the criterion values compare identical samples:
    AIC(n) = n_eff * ln(RSS / n_eff) + 2 * (2 n).  Ties break toward the
    smaller order.

    Raises:
        ConfigError: If the grid is empty or no candidate can be fitted.
    """
    orders = sorted({int(n) for n in grid})
    if not orders:
        raise ConfigError("order grid is empty")
    if orders[0] < 1:
        raise ConfigError(f"orders must be >= 1, got {orders[0]}")
    n_total = len(rec)
    start = orders[-1]
    best_n = None
    best_aic = np.inf
    failures = []
    for n in orders:
        try:
            _check_order(n, n_total)
            if n_total - start <= 2 * n:
                raise ConfigError(f"order {n} leaves no degrees of freedom")
            _, rss, n_eff = _solve_arx(rec.u, rec.y, n, start=start)
        except (ConfigError, ExcitationError) as err:
            failures.append(f"n={n}: {err}")
            continue
        with np.errstate(divide="ignore"):
            aic = n_eff * np.log(rss / n_eff) + 2.0 * (2 * n)
        if aic < best_aic:
            best_aic = aic
            best_n = n
    if best_n is None:
        raise ConfigError("no ARX order in the grid could be fitted: " + "; ".join(failures))
    return best_n


def default_aic_grid(n_x: int, n_total: int, max_order: int = 30) -> list[int]:
    """Default order grid {n_x + 1, ..., 30}, pruned by the data-length rule."""
    hi = min(max_order, n_total // MIN_SAMPLES_PER_ORDER)
    grid = list(range(n_x + 1, hi + 1))
    if not grid:
        raise ConfigError(
            f"record of length {n_total} cannot support any ARX order above {n_x}"
        )
    return grid


def predictor_to_innovations(pm: PredictorMarkov) -> InnovationsMarkov:
    """Innovations Markov parameters from predictor ones.

    H_1 = h_bar_1 and H_i = h_bar_i + sum_{j=1..i-1} h_bar_j H_{i-j}.
    """
    hb = pm.h_bar
    n = hb.size
    h = np.empty(n)
    for i in range(1, n + 1):
        acc = hb[i - 1]
        for j in range(1, i):
            acc += hb[j - 1] * h[i - j - 1]
        h[i - 1] = acc
    return InnovationsMarkov(h=h)


def predictor_to_innovations_g(pm: PredictorMarkov) -> np.ndarray:
    """Input-channel analogue: G_i = g_bar_i + sum_{j=1..i-1} h_bar_j G_{i-j}."""
    hb = pm.h_bar
    gb = pm.g_bar
    n = gb.size
    g = np.empty(n)
    for i in range(1, n + 1):
        acc = gb[i - 1]
        for j in range(1, i):
            acc += hb[j - 1] * g[i - j - 1]
        g[i - 1] = acc
    return g
