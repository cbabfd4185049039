"""Benchmark systems, signal generators, metrics, and the Monte Carlo harness.

Provides two fixed test systems, a random stable system generator, the FIT
and relative Markov-parameter error metrics, and a deterministic trial
runner.  All randomness is a pure function of a seed; every method inside a
trial consumes byte-identical data.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import butter, lfilter, sosfilt

from .arx_pre import default_aic_grid, select_order_aic
from .errors import ConfigError, ParsimidError
from .realization import RealizationConfig, identify
from .ss_model import SignalRecord, StateSpaceModel, impulse_response, markov_g, simulate

__all__ = [
    "Scenario",
    "TrialRow",
    "BenchReport",
    "example1_system",
    "example2_system",
    "random_system",
    "gen_rbs",
    "fit_metric",
    "error_g",
    "monte_carlo",
    "example1_scenario",
    "example2_scenario",
    "example3_scenario",
    "run_error_vs_n",
    "run_joint_fit",
    "write_trials_csv",
    "write_aggregates_json",
    "write_error_vs_n_csv",
    "write_joint_fit_csv",
]

EXAMPLE2_GAMMA = 0.9184


def example1_system() -> StateSpaceModel:
    """Third-order system: a resonant second-order input channel plus a
    slow first-order noise channel.

    u -> y: (0.21 q^-1 + 0.07 q^-2) / (1 - 0.6 q^-1 + 0.8 q^-2)
    e -> y: 1 / (1 - 0.98 q^-1), innovations variance 4.
    """
    A = np.array([
        [0.6, -0.8, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 0.98],
    ])
    B = np.array([[1.0], [0.0], [0.0]])
    C = np.array([[0.21, 0.07, 1.0]])
    K = np.array([[0.0], [0.0], [0.98]])
    return StateSpaceModel(A=A, B=B, C=C, D=0.0, K=K, sigma_e2=4.0)


def example2_system() -> tuple[StateSpaceModel, np.ndarray]:
    """Second-order system with a double pole, known to defeat many
    projection-based estimators, plus its band-stop input shaping filter.

    Returns the model (innovations variance 217.1) and the FIR coefficients
    [1, 0, -2 gamma^2, 0, gamma^4] applied to white noise to produce u.
    """
    g = EXAMPLE2_GAMMA
    A = np.array([[2 * g, -g * g], [1.0, 0.0]])
    B = np.array([[1.0], [-2.0]])
    C = np.array([[2.0, -1.0]])
    K = np.array([[-0.21], [-0.559]])
    input_filter = np.array([1.0, 0.0, -2 * g * g, 0.0, g ** 4])
    return StateSpaceModel(A=A, B=B, C=C, D=0.0, K=K, sigma_e2=217.1), input_filter


def _minimal(A, B, C, K) -> bool:
    n = A.shape[0]
    gains = np.hstack([B, K])
    ctrb = gains
    blk = gains
    obs = C
    row = C
    for _ in range(n - 1):
        blk = A @ blk
        ctrb = np.hstack([ctrb, blk])
        row = row @ A
        obs = np.vstack([obs, row])
    return np.linalg.matrix_rank(ctrb) == n and np.linalg.matrix_rank(obs) == n


def random_system(
    seed,
    n_x: int = 6,
    pole_range: tuple[float, float] = (0.78, 0.9),
    b_scale: float = 5.0,
    k_scale: float = 0.1,
    max_draws: int = 10_000,
) -> StateSpaceModel:
    """Random stable SISO model with a constrained dominant pole.

    A dense Gaussian matrix is rescaled so its spectral radius is uniform
    in ``pole_range``; B entries are N(0, b_scale^2), C entries N(0, 1),
    D = 0, and K is redrawn (N(0, k_scale^2) entries) until the predictor
    matrix A - K C is stable.  Non-minimal draws are rejected.  The result
    is a bit-exact function of the seed.

    Raises:
        ConfigError: When the rejection-sampling budget is exhausted.
    """
    rng = np.random.default_rng(seed)
    draws = 0
    while draws < max_draws:
        draws += 1
        A0 = rng.standard_normal((n_x, n_x))
        rho = float(np.max(np.abs(np.linalg.eigvals(A0))))
        if rho <= 0:
            continue
        A = A0 * (rng.uniform(*pole_range) / rho)
        B = b_scale * rng.standard_normal((n_x, 1))
        C = rng.standard_normal((1, n_x))
        K = None
        for _ in range(100):
            draws += 1
            cand = k_scale * rng.standard_normal((n_x, 1))
            if np.max(np.abs(np.linalg.eigvals(A - cand @ C))) < 1.0:
                K = cand
                break
        if K is None or not _minimal(A, B, C, K):
            continue
        return StateSpaceModel(A=A, B=B, C=C, D=0.0, K=K, sigma_e2=1.0)
    raise ConfigError(f"random system rejection sampling exhausted after {max_draws} draws")


def gen_rbs(N: int, band_high: float, seed) -> np.ndarray:
    """Band-limited random binary sequence of +/- 1 values.

    White Gaussian noise is low-pass filtered (order-8 Butterworth at the
    normalized cutoff ``band_high``, as a fraction of Nyquist) and its sign
    taken.  ``band_high = 1`` skips the filter and returns sign of white
    noise.
    """
    if not 0.0 < band_high <= 1.0:
        raise ConfigError(f"band_high must be in (0, 1], got {band_high}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(N)
    if band_high < 1.0:
        sos = butter(8, band_high, output="sos")
        w = sosfilt(sos, w)
    s = np.sign(w)
    s[s == 0] = 1.0
    return s


def fit_metric(g_o, g_hat) -> float:
    """Normalized impulse-response match: 100 (1 - |g_o - g_hat| / |g_o - mean(g_o)|)."""
    g_o = np.asarray(g_o, dtype=float).ravel()
    g_hat = np.asarray(g_hat, dtype=float).ravel()
    if g_o.shape != g_hat.shape:
        raise ConfigError(f"length mismatch: {g_o.size} vs {g_hat.size}")
    denom = float(np.linalg.norm(g_o - np.mean(g_o)))
    if denom == 0.0:
        raise ConfigError("reference impulse response is constant; FIT undefined")
    return 100.0 * (1.0 - float(np.linalg.norm(g_o - g_hat)) / denom)


def error_g(G_hat, G_true) -> float:
    """Relative 2-norm error of a Markov-parameter row estimate."""
    G_hat = np.asarray(G_hat, dtype=float).ravel()
    G_true = np.asarray(G_true, dtype=float).ravel()
    if G_hat.shape != G_true.shape:
        raise ConfigError(f"length mismatch: {G_hat.size} vs {G_true.size}")
    denom = float(np.linalg.norm(G_true))
    if denom == 0.0:
        raise ConfigError("true Markov parameters have zero norm")
    return float(np.linalg.norm(G_hat - G_true)) / denom


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo study: system source, signal sizes, and methods."""

    name: str
    system_source: str  # "example1" | "example2" | "random"
    N: int
    f: int
    n_x: int
    noise_variance: float
    trials: int
    methods: tuple[str, ...]
    p: int | None = None  # explicit past horizon; None selects by AIC
    aic_grid: tuple[int, ...] = ()
    fit_lags: int = 100

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.system_source not in ("example1", "example2", "random"):
            raise ConfigError(f"unknown system source {self.system_source!r}")
        if self.p is not None and self.N <= self.f + self.p:
            raise ConfigError(f"N={self.N} must exceed f + p = {self.f + self.p}")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "aic_grid", tuple(self.aic_grid))


@dataclass(frozen=True)
class TrialRow:
    trial: int
    method: str
    fit: float
    error_g: float
    seed: int
    p: int
    failure: str | None = None


@dataclass(frozen=True)
class BenchReport:
    """Per-trial results; aggregates are always recomputed from the table."""

    scenario: Scenario
    master_seed: int
    rows: tuple[TrialRow, ...]

    def aggregates(self) -> dict:
        out = {}
        for method in self.scenario.methods:
            fits = np.array([r.fit for r in self.rows if r.method == method and r.failure is None])
            errs = np.array([
                r.error_g for r in self.rows if r.method == method and r.failure is None
            ])
            errs = errs[np.isfinite(errs)]
            n_fail = sum(1 for r in self.rows if r.method == method and r.failure is not None)
            entry = {"failures": n_fail, "successes": int(fits.size)}
            if fits.size:
                entry.update(
                    fit_mean=float(np.mean(fits)),
                    fit_median=float(np.median(fits)),
                    fit_var=float(np.var(fits, ddof=1)) if fits.size > 1 else 0.0,
                )
            if errs.size:
                entry.update(
                    error_g_mean=float(np.mean(errs)),
                    error_g_median=float(np.median(errs)),
                    error_g_var=float(np.var(errs, ddof=1)) if errs.size > 1 else 0.0,
                )
            out[method] = entry
        return out


def _trial_seeds(master_seed: int, trial: int) -> tuple[int, int, int, int]:
    state = np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(4)
    return tuple(int(v) for v in state)


def _trial_data(sc: Scenario, master_seed: int, trial: int):
    """System, record, and reporting seed for one trial (method independent)."""
    report_seed, sys_seed, input_seed, noise_seed = _trial_seeds(master_seed, trial)
    if sc.system_source == "example1":
        system = example1_system()
        u = np.random.default_rng(input_seed).standard_normal(sc.N)
    elif sc.system_source == "example2":
        system, filt = example2_system()
        r = np.random.default_rng(input_seed).standard_normal(sc.N)
        u = lfilter(filt, [1.0], r)
    else:
        system = random_system(sys_seed, n_x=sc.n_x)
        u = gen_rbs(sc.N, 0.1, input_seed)
    e = np.sqrt(sc.noise_variance) * np.random.default_rng(noise_seed).standard_normal(sc.N)
    y = simulate(system, u, e)
    return system, SignalRecord(u=u, y=y), report_seed


def _run_trial(sc: Scenario, master_seed: int, trial: int) -> list[TrialRow]:
    try:
        system, rec, seed = _trial_data(sc, master_seed, trial)
    except ParsimidError as err:
        seed = _trial_seeds(master_seed, trial)[0]
        return [
            TrialRow(trial, m, float("nan"), float("nan"), seed, -1, f"data: {err}")
            for m in sc.methods
        ]

    try:
        if sc.p is not None:
            p = sc.p
        else:
            grid = sc.aic_grid or default_aic_grid(sc.n_x, len(rec))
            p = select_order_aic(rec, grid)
    except ParsimidError as err:
        return [
            TrialRow(trial, m, float("nan"), float("nan"), seed, -1, f"aic: {err}")
            for m in sc.methods
        ]

    g_true = impulse_response(system, sc.fit_lags)
    if sc.f > 1:
        gff_true = np.append(markov_g(system, sc.f - 1)[::-1], system.D[0, 0])
    else:
        gff_true = np.array([system.D[0, 0]])

    rows = []
    for method in sc.methods:
        try:
            cfg = RealizationConfig(n_x=sc.n_x, f=sc.f, p=p, method=method)
            result = identify(rec, cfg)
            fit = fit_metric(g_true, impulse_response(result.model, sc.fit_lags))
            last_row = result.diagnostics.get("markov_last_row")
            if method in ("parsim", "parsim_opt") and last_row is not None:
                err_val = error_g(last_row, gff_true)
            else:
                err_val = float("nan")
            rows.append(TrialRow(trial, method, fit, err_val, seed, p))
        except (ParsimidError, np.linalg.LinAlgError) as err:
            rows.append(TrialRow(trial, method, float("nan"), float("nan"), seed, p, str(err)))
    return rows


def _run_trial_star(args) -> list[TrialRow]:
    return _run_trial(*args)


def monte_carlo(sc: Scenario, master_seed: int, jobs: int = 1) -> BenchReport:
    """Run a scenario: per trial, derive seeds, generate one data record,
    score every configured method on it, and collect the table.

    Individual trial failures are recorded per row (with the failing stage
    in the message) and never abort the run.  Results are independent of
    ``jobs`` because every trial is a pure function of
    (scenario, master_seed, trial index).
    """
    if master_seed < 0:
        raise ConfigError("master seed must be a nonnegative integer")
    tasks = [(sc, master_seed, t) for t in range(sc.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_trial = list(pool.map(_run_trial_star, tasks))
    else:
        per_trial = [_run_trial(*t) for t in tasks]
    rows = tuple(row for trial_rows in per_trial for row in trial_rows)
    return BenchReport(scenario=sc, master_seed=master_seed, rows=rows)


def example1_scenario(
    N: int = 2000,
    trials: int = 50,
    methods=("parsim", "parsim_opt", "ssarx", "classical"),
    f: int = 10,
    p: int | None = None,
    noise_variance: float = 4.0,
    name: str | None = None,
) -> Scenario:
    return Scenario(
        name=name or f"example1_N{N}",
        system_source="example1",
        N=N, f=f, n_x=3,
        noise_variance=noise_variance,
        trials=trials, methods=tuple(methods), p=p,
    )


def example2_scenario(
    N: int = 2000,
    trials: int = 50,
    methods=("parsim", "parsim_opt", "ssarx", "classical"),
    f: int = 7,
    p: int | None = None,
    noise_variance: float = 217.1,
) -> Scenario:
    return Scenario(
        name=f"example2_N{N}",
        system_source="example2",
        N=N, f=f, n_x=2,
        noise_variance=noise_variance,
        trials=trials, methods=tuple(methods), p=p,
    )


def example3_scenario(
    noise_variance: float,
    trials: int = 50,
    methods=("parsim", "parsim_opt"),
    N: int = 1000,
    f: int = 20,
) -> Scenario:
    return Scenario(
        name=f"example3_var{noise_variance:g}",
        system_source="random",
        N=N, f=f, n_x=6,
        noise_variance=noise_variance,
        trials=trials, methods=tuple(methods),
    )


def run_error_vs_n(
    n_values=(1000, 1500, 2000, 2500, 3000),
    trials: int = 50,
    master_seed: int = 0,
    methods=("parsim", "parsim_opt"),
    f: int = 10,
    jobs: int = 1,
) -> dict[int, BenchReport]:
    """Markov-parameter error sweep over sample sizes (plot data for the
    error-versus-N figure)."""
    return {
        n: monte_carlo(example1_scenario(N=n, trials=trials, methods=methods, f=f), master_seed, jobs)
        for n in n_values
    }


def run_joint_fit(
    noise_levels=(1.0, 10.0, 100.0),
    trials: int = 50,
    master_seed: int = 0,
    methods=("parsim", "parsim_opt"),
    jobs: int = 1,
) -> dict[float, BenchReport]:
    """Random-system joint FIT study, one report per noise level."""
    return {
        var: monte_carlo(example3_scenario(var, trials=trials, methods=methods), master_seed, jobs)
        for var in noise_levels
    }


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trials_csv(report: BenchReport, path) -> None:
    """Per-trial table with the fixed header trial,method,fit,error_g,seed."""
    lines = ["trial,method,fit,error_g,seed"]
    for r in report.rows:
        lines.append(f"{r.trial},{r.method},{_fmt(r.fit)},{_fmt(r.error_g)},{r.seed}")
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, float):
        return None if not np.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_aggregates_json(report: BenchReport, path) -> None:
    """Aggregate sidecar: scenario settings, per-method statistics, chosen horizons."""
    chosen_p = {}
    failures = []
    for r in report.rows:
        chosen_p.setdefault(r.trial, r.p)
        if r.failure is not None:
            failures.append({"trial": r.trial, "method": r.method, "reason": r.failure})
    doc = {
        "scenario": asdict(report.scenario),
        "master_seed": report.master_seed,
        "aggregates": report.aggregates(),
        "chosen_p": [chosen_p[t] for t in sorted(chosen_p)],
        "failures": failures,
    }
    Path(path).write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def write_error_vs_n_csv(reports: dict[int, BenchReport], path) -> None:
    """Plot data: one row per (N, method) with mean and variance of the error."""
    lines = ["n_samples,method,error_g_mean,error_g_var"]
    for n in sorted(reports):
        agg = reports[n].aggregates()
        for method in reports[n].scenario.methods:
            entry = agg[method]
            if "error_g_mean" in entry:
                lines.append(
                    f"{n},{method},{_fmt(entry['error_g_mean'])},{_fmt(entry['error_g_var'])}"
                )
    Path(path).write_text("\n".join(lines) + "\n")


def write_joint_fit_csv(reports: dict[float, BenchReport], path) -> None:
    """Plot data: per noise level, paired FIT values of the configured methods."""
    methods = None
    lines = None
    for var in sorted(reports):
        rep = reports[var]
        if methods is None:
            methods = rep.scenario.methods
            lines = ["noise_variance,trial," + ",".join(f"fit_{m}" for m in methods)]
        by_trial: dict[int, dict[str, float]] = {}
        for r in rep.rows:
            by_trial.setdefault(r.trial, {})[r.method] = r.fit
        for t in sorted(by_trial):
            vals = ",".join(_fmt(by_trial[t].get(m, float("nan"))) for m in methods)
            lines.append(f"{_fmt(var)},{t},{vals}")
    Path(path).write_text("\n".join(lines) + "\n")
