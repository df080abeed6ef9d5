"""Probabilistic regression with exact and sparse pseudo-input Gaussian processes.

The sparse model approximates a full GP through M learned pseudo-inputs,
bringing training cost down to O(M^2 N); optional extensions learn a
supervised linear projection of high-dimensional inputs and per-pseudo-input
uncertainties for input-dependent noise.
"""

from .data import (
    Dataset,
    Preprocessing,
    SplitSpec,
    generate_heteroscedastic,
    load_csv,
    load_motorcycle,
    normalize,
    pca_project,
    preprocess,
)
from .exact_gp import GpModel
from .evaluation import ScoreReport, mse, nlpd, run_experiment, score_model, train_model
from .exceptions import DataError, NumericalError
from .gradients import finite_diff_check, nlml_and_grad, pack, pack_gp, unpack, unpack_gp
from .kernels import ArdParams, ProjParams, ard_kernel, build_cross_matrix, stabilized_cholesky
from .model import Prediction, TrainedModel
from .model_io import load_model, save_model
from .optimizer import OptConfig, OptTrace, minimize, multistart_fit
from .sparse import (
    SpgpParams,
    Variant,
    sample_marginal,
    spgp_cov_matrix,
    spgp_nlml,
    spgp_precompute,
    spgp_predict,
)

__version__ = "0.1.0"

__all__ = [
    "ArdParams", "DataError", "Dataset", "GpModel", "NumericalError", "OptConfig",
    "OptTrace", "Prediction", "Preprocessing", "ProjParams", "ScoreReport",
    "SpgpParams", "SplitSpec", "TrainedModel", "Variant", "ard_kernel",
    "build_cross_matrix", "finite_diff_check", "generate_heteroscedastic",
    "load_csv", "load_model", "load_motorcycle", "minimize", "mse",
    "multistart_fit", "nlml_and_grad", "nlpd", "normalize", "pack", "pack_gp",
    "pca_project", "preprocess", "run_experiment", "sample_marginal",
    "save_model", "score_model", "spgp_cov_matrix", "spgp_nlml",
    "spgp_precompute", "spgp_predict", "stabilized_cholesky", "train_model",
    "unpack", "unpack_gp",
]
