"""Gradient estimation through stochastic binary and semi-hard neurons."""

from .errors import (
    ActivationOverflowError,
    CapacityError,
    ConfigError,
    ContractError,
    DegenerateInputError,
    DivergenceError,
)
from .estimators import (
    BaselineTracker,
    CorrectorModel,
    GradientEstimate,
    centered_estimate,
    corrected_estimate,
    finite_difference,
    spsa_estimate,
    straight_through_backward,
    train_corrector,
    unbiased_estimate,
    update_baseline,
)
from .network import (
    BINARY,
    SIGMOID,
    ForwardTrace,
    Layer,
    LayeredNetwork,
    UnitKind,
    forward,
    forward_semihard,
    forward_stochastic,
    noisy_rectifier,
    sigmoid,
)
from .losses import LossSpec, register_loss
from .noise import NoiseStream, draw_gaussian, draw_uniform
from .oracle import exact_estimator_moments, exact_expected_loss, exact_gradient

__version__ = "0.1.0"

__all__ = [
    "ActivationOverflowError",
    "CapacityError",
    "ConfigError",
    "ContractError",
    "DegenerateInputError",
    "DivergenceError",
    "BaselineTracker",
    "CorrectorModel",
    "GradientEstimate",
    "centered_estimate",
    "corrected_estimate",
    "finite_difference",
    "spsa_estimate",
    "straight_through_backward",
    "train_corrector",
    "unbiased_estimate",
    "update_baseline",
    "BINARY",
    "SIGMOID",
    "ForwardTrace",
    "Layer",
    "LayeredNetwork",
    "UnitKind",
    "forward",
    "forward_semihard",
    "forward_stochastic",
    "noisy_rectifier",
    "sigmoid",
    "LossSpec",
    "register_loss",
    "NoiseStream",
    "draw_gaussian",
    "draw_uniform",
    "exact_estimator_moments",
    "exact_expected_loss",
    "exact_gradient",
]
