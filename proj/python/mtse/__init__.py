"""Multi-target shrinkage covariance estimation."""

from ._core import (
    InputError,
    NumericalError,
    block_identity_targets,
    gmv_weights,
    lw_estimator,
    mtse,
    oracle_mtse,
    orthonormalize,
    psd_project,
    run_backtest,
    run_experiment,
    sample_covariance,
    scaled_inner,
    sector_targets,
    vhat_proj,
    vhat_s,
)

__all__ = [
    "InputError",
    "NumericalError",
    "block_identity_targets",
    "gmv_weights",
    "lw_estimator",
    "mtse",
    "oracle_mtse",
    "orthonormalize",
    "psd_project",
    "run_backtest",
    "run_experiment",
    "sample_covariance",
    "scaled_inner",
    "sector_targets",
    "vhat_proj",
    "vhat_s",
]
