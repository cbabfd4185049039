"""Subspace identification of SISO state-space models.

Estimates innovations-form models (A, B, C, D, K) from input/output data
through row-wise regression banks (ordinary or weighted least squares), a
classical single-projection estimator, and an ARX-pre-estimating
predictor-form method, plus a Monte Carlo benchmark harness.
"""

from .arx_pre import (
    InnovationsMarkov,
    PredictorMarkov,
    default_aic_grid,
    fit_arx,
    predictor_to_innovations,
    predictor_to_innovations_g,
    select_order_aic,
)
from .benchmark import (
    BenchReport,
    Scenario,
    TrialRow,
    error_g,
    example1_scenario,
    example1_system,
    example2_scenario,
    example2_system,
    example3_scenario,
    fit_metric,
    gen_rbs,
    monte_carlo,
    random_system,
    run_error_vs_n,
    run_joint_fit,
    write_aggregates_json,
    write_error_vs_n_csv,
    write_joint_fit_csv,
    write_trials_csv,
)
from .data_blocks import (
    DataBlocks,
    Projector,
    assemble_blocks,
    build_hankel,
    orth_projection_complement,
)
from .errors import (
    ConfigError,
    DivergenceError,
    ExcitationError,
    ParsimidError,
    RankError,
)
from .estimators import (
    METHODS,
    NoiseToeplitz,
    RangeEstimate,
    build_noise_toeplitz,
    classical_projection,
    parsim_ols,
    parsim_wls,
    ssarx_estimate,
    toeplitz_gram_band,
)
from .realization import (
    IdentifiedModel,
    RealizationConfig,
    estimate_bk,
    extract_ac,
    identify,
    psd_sqrt,
    weight_w2,
    weighted_svd_realize,
)
from .ss_model import (
    PredictorModel,
    SignalRecord,
    StateSpaceModel,
    from_predictor_form,
    impulse_response,
    is_stable,
    load_model,
    markov_g,
    markov_h,
    model_from_dict,
    model_to_dict,
    save_model,
    simulate,
    spectral_radius,
    to_predictor_form,
)

__version__ = "0.1.0"
