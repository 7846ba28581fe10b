"""Shifted-basis positional encoders and Kronecker-structured signal fitting."""

from .embedders import (
    ALL_KINDS,
    FOURIER_KINDS,
    SHIFTED_KINDS,
    Embedder,
    embed_batch,
    embed_scalar,
    embedder_from_config,
    embedder_to_config,
    make_embedder,
)
from .encoding import (
    BlendingMatrix,
    SeparableEncoding,
    build_blending,
    complex_encode,
    encode_grid,
    grid_points,
    interp_weights,
    kron_predict,
    simple_encode,
    simple_features,
)
from .exceptions import (
    ConfigError,
    DegenerateSpacingError,
    DivergenceError,
    KronfitError,
    OutOfDomainError,
    ParameterError,
    RankDeficiencyError,
)
from .signals import (
    GridSignal,
    SampleSet,
    grid_split,
    load_grid_tensor,
    load_image,
    load_image_stack,
    make_grid_signal,
    psnr,
    random_split,
    save_grid_tensor,
    save_image,
)
from .solvers import (
    MlpModel,
    WeightTensor,
    closed_form_fit,
    gd_fit_linear,
    mlp_gradient_check,
    mlp_train,
    mse,
    predict,
    predict_grid,
    predict_samples,
)
from .spectral import (
    SpectralReport,
    circulant_spectrum,
    empirical_distance,
    spectral_report,
    stable_rank,
    theoretical_distance,
    theoretical_stable_rank,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS",
    "FOURIER_KINDS",
    "SHIFTED_KINDS",
    "BlendingMatrix",
    "ConfigError",
    "DegenerateSpacingError",
    "DivergenceError",
    "Embedder",
    "GridSignal",
    "KronfitError",
    "MlpModel",
    "OutOfDomainError",
    "ParameterError",
    "RankDeficiencyError",
    "SampleSet",
    "SeparableEncoding",
    "SpectralReport",
    "WeightTensor",
    "build_blending",
    "circulant_spectrum",
    "closed_form_fit",
    "complex_encode",
    "embed_batch",
    "embed_scalar",
    "embedder_from_config",
    "embedder_to_config",
    "empirical_distance",
    "encode_grid",
    "gd_fit_linear",
    "grid_points",
    "grid_split",
    "interp_weights",
    "kron_predict",
    "load_grid_tensor",
    "load_image",
    "load_image_stack",
    "make_embedder",
    "make_grid_signal",
    "mlp_gradient_check",
    "mlp_train",
    "mse",
    "predict",
    "predict_grid",
    "predict_samples",
    "psnr",
    "random_split",
    "save_grid_tensor",
    "save_image",
    "simple_encode",
    "simple_features",
    "spectral_report",
    "stable_rank",
    "theoretical_distance",
    "theoretical_stable_rank",
]
