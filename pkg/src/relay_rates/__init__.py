"""Compress-forward relay rate regions for discrete, Gaussian and fading two-way relay channels."""

__version__ = "0.1.0"

from .errors import (
    ArgumentError,
    ConvergenceError,
    DegenerateChannelError,
    DomainError,
    EmptyRegion,
    FactorizationError,
    GeometryError,
    NormalizationError,
    RelayRatesError,
    SizeError,
    UnknownVariableError,
)
from .info import ConditionalPmf, JointPmf, conditional_mutual_information, entropy, factorized_pmf, marginalize
from .frontier import RegionBoundary, SigmaGrid
from .gaussian import GaussianTwrcChannel, RateTuple, SigmaThresholds
from .fading import ExpRatePair, FadingRateTuple, FadingThresholds, FadingTwrcChannel
from .geometry import ClassificationCell, NodeLayout

__all__ = [
    "ArgumentError", "ConvergenceError", "DegenerateChannelError", "DomainError", "EmptyRegion",
    "FactorizationError", "GeometryError", "NormalizationError", "RelayRatesError", "SizeError",
    "UnknownVariableError", "ConditionalPmf", "JointPmf", "conditional_mutual_information", "entropy",
    "factorized_pmf", "marginalize", "RegionBoundary", "SigmaGrid", "GaussianTwrcChannel", "RateTuple",
    "SigmaThresholds", "ExpRatePair", "FadingRateTuple", "FadingThresholds", "FadingTwrcChannel",
    "ClassificationCell", "NodeLayout",
]
