"""Bi-functional autoencoders for two-way time-series dimension reduction.

Layers are integral operators with learnable bivariate kernel surfaces, so
both the number of functional features and the number of timepoints shrink
on the way to the latent code.  The package also carries the Gaussian
process simulator, the PCA / FPCA / dense-AE baselines, downstream
functional models, and a reproducible experiment harness.
"""

from .data import FunctionalDataset, SplitSpec, Standardizer, load_csv, save_csv, train_test_split
from .evaluate import (
    evaluate_pipeline,
    flm_classify_fit,
    flm_classify_predict,
    fof_fit,
    fof_predict,
    functional_rmse,
)
from .gp import MaternParams, SimConfig, cov_matrix, matern52_cov, sample_gp
from .grids import Grid, inner_product, integrate, linear_resample, make_uniform_grid
from .layers import Activation, ContinuousLayer, init_layer, layer_backward, layer_forward, sgd_step
from .model import (
    BFAEConfig,
    BFAEModel,
    TrainHistory,
    TrainingDiverged,
    bottleneck_config,
    build,
    load_model,
    model_gradients,
    reconstruction_loss,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Grid", "make_uniform_grid", "integrate", "inner_product", "linear_resample",
    "FunctionalDataset", "SplitSpec", "Standardizer", "load_csv", "save_csv",
    "train_test_split",
    "MaternParams", "SimConfig", "matern52_cov", "cov_matrix", "sample_gp",
    "Activation", "ContinuousLayer", "init_layer", "layer_forward", "layer_backward",
    "sgd_step",
    "BFAEConfig", "BFAEModel", "TrainHistory", "TrainingDiverged", "bottleneck_config",
    "build", "train", "reconstruction_loss", "model_gradients", "save_model", "load_model",
    "functional_rmse", "flm_classify_fit", "flm_classify_predict", "fof_fit",
    "fof_predict", "evaluate_pipeline",
    "__version__",
]
