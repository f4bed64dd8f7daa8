"""Corrected self-consuming training loops on Gaussian models.

A model is repeatedly refit on its own (corrected) synthetic output plus
a fixed real dataset. The package provides the Gaussian model core, the
correction operator with distribution-wise and pointwise-matched routes,
exact transport metrics, closed-form stability bounds, the loop engine
with sweep orchestration, and a CSV/TOML/CLI layer.
"""

from .bounds import (
    GridCell,
    StabilityConstants,
    admissibility_grid,
    admissible,
    bound_trajectory,
    contraction_factor,
    critical_lambda,
    rho,
    strength_threshold,
    tau_n,
)
from .correction import (
    CorrectionMode,
    CorrectionSpec,
    apply_pointwise_correction,
    empirical_cdf_sup_distance,
    match_pointwise,
    mixture_density,
    sample_corrected,
)
from .engine import (
    AccrualPolicy,
    ConfigSummary,
    GenerationRecord,
    LoopConfig,
    SweepRun,
    Trajectory,
    accrue,
    derive_seed,
    run_loop,
    summarize,
    sweep,
)
from .errors import (
    CholeskyFailureError,
    ConfigError,
    CorrloopError,
    DimensionMismatchError,
    EigFailureError,
    EmptyInputError,
    EmptyOrSingletonError,
    EmptySynthSetError,
    InvalidDeltaError,
    LoopFailureError,
    NonPositiveLogArgumentError,
    ParseError,
    SizeMismatchError,
)
from .experiment import (
    BoundsSpec,
    Experiment,
    OutputSpec,
    SweepSpec,
    configs_for_sweep,
    load_experiment,
    parse_experiment,
)
from .gaussian import (
    Dataset,
    GaussianParams,
    concat_datasets,
    fit_gaussian,
    from_param_vector,
    log_pdf,
    log_pdf_batch,
    sample_gaussian,
    to_param_vector,
)
from .metrics import empirical_w2, gaussian_w2, param_distance

__version__ = "0.1.0"

__all__ = [
    "AccrualPolicy",
    "BoundsSpec",
    "CholeskyFailureError",
    "ConfigError",
    "ConfigSummary",
    "CorrectionMode",
    "CorrectionSpec",
    "CorrloopError",
    "Dataset",
    "DimensionMismatchError",
    "EigFailureError",
    "EmptyInputError",
    "EmptyOrSingletonError",
    "EmptySynthSetError",
    "Experiment",
    "GaussianParams",
    "GenerationRecord",
    "GridCell",
    "InvalidDeltaError",
    "LoopConfig",
    "LoopFailureError",
    "NonPositiveLogArgumentError",
    "OutputSpec",
    "ParseError",
    "SizeMismatchError",
    "StabilityConstants",
    "SweepRun",
    "SweepSpec",
    "Trajectory",
    "accrue",
    "admissibility_grid",
    "admissible",
    "apply_pointwise_correction",
    "bound_trajectory",
    "concat_datasets",
    "configs_for_sweep",
    "contraction_factor",
    "critical_lambda",
    "derive_seed",
    "empirical_cdf_sup_distance",
    "empirical_w2",
    "fit_gaussian",
    "from_param_vector",
    "gaussian_w2",
    "load_experiment",
    "log_pdf",
    "log_pdf_batch",
    "match_pointwise",
    "mixture_density",
    "param_distance",
    "parse_experiment",
    "rho",
    "run_loop",
    "sample_corrected",
    "sample_gaussian",
    "strength_threshold",
    "summarize",
    "sweep",
    "tau_n",
    "to_param_vector",
]
