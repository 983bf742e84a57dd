"""Dense-network kernel surrogates.

Train small fully-connected networks, extract their empirical tangent and
last-layer (conjugate) kernels, fit kernel regressors and kernel logistic
classifiers from them, and check the train/test loss bounds relating the two
kernels. The heavy lifting lives in the C++ extension `kslab._core`.
"""

from kslab._core import (
    Activation,
    KernelKind,
    LogisticFit,
    Mlp,
    NtkAlgorithm,
    RegressionFit,
    WeightedGrid,
    __version__,
    ck_features,
    ck_gram,
    fit_ck_features,
    fit_kernel_logistic,
    fit_kernel_regression,
    forward,
    init_mlp,
    load_mlp,
    make_grid_1d,
    ntk_gram,
    ntk_gram_cross,
    ntk_oracle,
    predict,
    predict_prob,
    run_experiment_json,
    save_mlp,
    train_regression,
    weighted_norm,
)

__all__ = [
    "Activation",
    "KernelKind",
    "LogisticFit",
    "Mlp",
    "NtkAlgorithm",
    "RegressionFit",
    "WeightedGrid",
    "__version__",
    "ck_features",
    "ck_gram",
    "fit_ck_features",
    "fit_kernel_logistic",
    "fit_kernel_regression",
    "forward",
    "init_mlp",
    "load_mlp",
    "make_grid_1d",
    "ntk_gram",
    "ntk_gram_cross",
    "ntk_oracle",
    "predict",
    "predict_prob",
    "run_experiment_json",
    "save_mlp",
    "train_regression",
    "weighted_norm",
]
