"""SISO state-space models in innovations and predictor form.

The canonical representation is the innovations form

    x[k+1] = A x[k] + B u[k] + K e[k]
    y[k]   = C x[k] + D u[k] + e[k]

driven by a white innovations sequence ``e`` of variance ``sigma_e2``.
The equivalent predictor form substitutes ``A_bar = A - K C`` and
``B_bar = B - K D`` and is driven by the measured input and output:

    x[k+1] = A_bar x[k] + B_bar u[k] + K y[k]

``A_bar`` is stable whenever the one-step predictor converges, which makes
the predictor form the natural home for high-order regression models.

All objects in this module are immutable value types; operations are pure
functions of their inputs and safe to share between workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError

__all__ = [
    "StateSpaceModel",
    "PredictorModel",
    "SignalRecord",
    "to_predictor_form",
    "from_predictor_form",
    "simulate",
    "markov_g",
    "markov_h",
    "impulse_response",
    "spectral_radius",
    "is_stable",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


def _as_square(x, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {a.shape}")
    return a


def _as_col(x, n: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1, 1)
    if a.shape != (n, 1):
        raise ConfigError(f"{name} must have shape ({n}, 1), got {np.shape(x)}")
    return a


def _as_row(x, n: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(1, -1)
    if a.shape != (1, n):
        raise ConfigError(f"{name} must have shape (1, {n}), got {np.shape(x)}")
    return a


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateSpaceModel:
    """Innovations-form model (A, B, C, D, K) with innovations variance.

    Attributes:
        A: State transition matrix, shape (n_x, n_x).
        B: Input matrix, shape (n_x, 1).
        C: Output matrix, shape (1, n_x).
        D: Feedthrough, shape (1, 1).
        K: Stationary one-step-predictor gain, shape (n_x, 1).
        sigma_e2: Variance of the white innovations sequence, >= 0.

    Only single-input single-output models are supported; scalars and 1-D
    arrays are accepted for convenience and reshaped.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    K: np.ndarray
    sigma_e2: float = 1.0

    def __post_init__(self):
        A = _as_square(self.A, "A")
        n = A.shape[0]
        B = _as_col(self.B, n, "B")
        C = _as_row(self.C, n, "C")
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if D.shape != (1, 1):
            raise ConfigError(f"D must be scalar (SISO), got shape {D.shape}")
        K = _as_col(self.K, n, "K")
        if not np.isfinite(self.sigma_e2) or self.sigma_e2 < 0:
            raise ConfigError(f"sigma_e2 must be a nonnegative real, got {self.sigma_e2}")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D), ("K", K)):
            if not np.all(np.isfinite(M)):
                raise ConfigError(f"{name} contains non-finite entries")
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "B", _freeze(B))
        object.__setattr__(self, "C", _freeze(C))
        object.__setattr__(self, "D", _freeze(D))
        object.__setattr__(self, "K", _freeze(K))
        object.__setattr__(self, "sigma_e2", float(self.sigma_e2))

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class PredictorModel:
    """Predictor-form model with A_bar = A - K C and B_bar = B - K D.

    Carries ``sigma_e2`` alongside the matrices so conversion to and from
    the innovations form is an identity on every field.
    """

    A_bar: np.ndarray
    B_bar: np.ndarray
    C: np.ndarray
    D: np.ndarray
    K: np.ndarray
    sigma_e2: float = 1.0

    def __post_init__(self):
        A = _as_square(self.A_bar, "A_bar")
        n = A.shape[0]
        object.__setattr__(self, "A_bar", _freeze(A))
        object.__setattr__(self, "B_bar", _freeze(_as_col(self.B_bar, n, "B_bar")))
        object.__setattr__(self, "C", _freeze(_as_row(self.C, n, "C")))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if D.shape != (1, 1):
            raise ConfigError(f"D must be scalar (SISO), got shape {D.shape}")
        object.__setattr__(self, "D", _freeze(D))
        object.__setattr__(self, "K", _freeze(_as_col(self.K, n, "K")))
        object.__setattr__(self, "sigma_e2", float(self.sigma_e2))

    @property
    def n_x(self) -> int:
        return self.A_bar.shape[0]


@dataclass(frozen=True)
class SignalRecord:
    """One input/output data record, optionally with the innovations used."""

    u: np.ndarray
    y: np.ndarray
    e: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if u.shape != y.shape:
            raise ConfigError(f"u and y must have equal length, got {u.size} and {y.size}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise ConfigError("record contains non-finite samples")
        object.__setattr__(self, "u", _freeze(u))
        object.__setattr__(self, "y", _freeze(y))
        if self.e is not None:
            e = np.asarray(self.e, dtype=float).ravel()
            if e.shape != u.shape:
                raise ConfigError("e must have the same length as u and y")
            object.__setattr__(self, "e", _freeze(e))

    def __len__(self) -> int:
        return self.u.size


def to_predictor_form(m: StateSpaceModel) -> PredictorModel:
    """Convert an innovations-form model to predictor form."""
    return PredictorModel(
        A_bar=m.A - m.K @ m.C,
        B_bar=m.B - m.K @ m.D,
        C=m.C,
        D=m.D,
        K=m.K,
        sigma_e2=m.sigma_e2,
    )


def from_predictor_form(p: PredictorModel) -> StateSpaceModel:
    """Convert a predictor-form model back to innovations form."""
    return StateSpaceModel(
        A=p.A_bar + p.K @ p.C,
        B=p.B_bar + p.K @ p.D,
        C=p.C,
        D=p.D,
        K=p.K,
        sigma_e2=p.sigma_e2,
    )


def simulate(
    m: StateSpaceModel,
    u,
    e=None,
    x0=None,
) -> np.ndarray:
    """Simulate the innovations-form recursion and return the output.

    Args:
        m: Model to simulate.
        u: Input sequence, length N.
        e: Innovations sequence, length N. Defaults to zeros.
        x0: Initial state, length n_x. Defaults to zeros.

    Returns:
        Output sequence y of length N with
        y[k] = C x[k] + D u[k] + e[k] and x[k+1] = A x[k] + B u[k] + K e[k].

    Raises:
        ConfigError: On length or dimension mismatch.
        DivergenceError: If the state leaves the finite range; the message
            reports the first offending step index.
    """
    u = np.asarray(u, dtype=float).ravel()
    if e is None:
        e = np.zeros_like(u)
    else:
        e = np.asarray(e, dtype=float).ravel()
    if u.shape != e.shape:
        raise ConfigError(f"u and e must have equal length, got {u.size} and {e.size}")
    n = m.n_x
    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.asarray(x0, dtype=float).ravel()
        if x.shape != (n,):
            raise ConfigError(f"x0 must have {n} entries, got {x.size}")

    A = m.A
    b = m.B[:, 0]
    c = m.C[0]
    d = m.D[0, 0]
    k = m.K[:, 0]
    y = np.empty_like(u)
    # divergence is detected explicitly, so let the overflow itself pass
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(u.size):
            yt = float(c @ x) + d * u[t] + e[t]
            if not math.isfinite(yt):
                raise DivergenceError(f"simulation diverged at step {t}")
            y[t] = yt
            x = A @ x + b * u[t] + k * e[t]
    return y


def markov_g(m: StateSpaceModel, count: int) -> np.ndarray:
    """Input-channel Markov parameters [C B, C A B, ..., C A^(count-1) B].

    Index i of the result (1-based) is C A^(i-1) B; the lag-zero term is
    the feedthrough D and is not included.
    """
    return _markov(m.A, m.B, m.C, count)


def markov_h(m: StateSpaceModel, count: int) -> np.ndarray:
    """Innovations-channel Markov parameters [C K, C A K, ...].

    Index i of the result (1-based) is C A^(i-1) K; the lag-zero term is
    the identity and is not included.
    """
    return _markov(m.A, m.K, m.C, count)


def _markov(A: np.ndarray, gain: np.ndarray, C: np.ndarray, count: int) -> np.ndarray:
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    out = np.empty(count)
    v = gain[:, 0].copy()
    c = C[0]
    for i in range(count):
        out[i] = c @ v
        v = A @ v
    return out


def impulse_response(m: StateSpaceModel, count: int) -> np.ndarray:
    """First ``count`` lags of the u -> y impulse response, [D, G_1, G_2, ...]."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    out = np.empty(count)
    out[0] = m.D[0, 0]
    if count > 1:
        out[1:] = markov_g(m, count - 1)
    return out


def spectral_radius(m: StateSpaceModel) -> float:
    """Largest eigenvalue magnitude of A."""
    return float(np.max(np.abs(np.linalg.eigvals(m.A))))


def is_stable(m: StateSpaceModel, tol_margin: float = 1e-9) -> bool:
    """True iff every eigenvalue of A lies strictly inside the unit disk.

    The check uses a strict margin: spectral_radius(m) < 1 - tol_margin.
    """
    return spectral_radius(m) < 1.0 - tol_margin


def model_to_dict(m: StateSpaceModel) -> dict:
    """JSON-ready dictionary with row-major nested arrays."""
    return {
        "A": m.A.tolist(),
        "B": m.B.tolist(),
        "C": m.C.tolist(),
        "D": m.D.tolist(),
        "K": m.K.tolist(),
        "sigma_e2": m.sigma_e2,
        "n_x": m.n_x,
        "n_u": m.n_u,
        "n_y": m.n_y,
    }


def model_from_dict(d: dict) -> StateSpaceModel:
    """Inverse of :func:`model_to_dict`, with dimension validation."""
    try:
        m = StateSpaceModel(
            A=d["A"], B=d["B"], C=d["C"], D=d["D"], K=d["K"],
            sigma_e2=d["sigma_e2"],
        )
    except KeyError as missing:
        raise ConfigError(f"model document missing key {missing}") from missing
    for key in ("n_x", "n_u", "n_y"):
        if key in d and int(d[key]) != getattr(m, key):
            raise ConfigError(f"model document {key}={d[key]} does not match matrices ({getattr(m, key)})")
    return m


def save_model(m: StateSpaceModel, path) -> None:
    """Write a model as JSON. Doubles round-trip bit-exactly."""
    Path(path).write_text(json.dumps(model_to_dict(m), indent=2) + "\n")


def load_model(path) -> StateSpaceModel:
    """Read a model written by :func:`save_model`."""
    return model_from_dict(json.loads(Path(path).read_text()))
