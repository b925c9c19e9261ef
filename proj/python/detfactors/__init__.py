"""Ranking meta-information factors behind pedestrian detection errors."""

from ._core import (
    ConfigError,
    ContractError,
    DomainError,
    Error,
    EstimatorError,
    ParseError,
    ReferentialError,
    ValidationError,
    WeatherUnavailable,
    __version__,
    analyze_files,
    angular_sizes,
    entropy_knn,
    kendall_tau_b,
    match_files,
    mi_discrete,
    mi_mixed,
    normalized_mi,
    plugin_entropy,
    synth_dataset,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DomainError",
    "Error",
    "EstimatorError",
    "ParseError",
    "ReferentialError",
    "ValidationError",
    "WeatherUnavailable",
    "__version__",
    "analyze_files",
    "angular_sizes",
    "entropy_knn",
    "kendall_tau_b",
    "match_files",
    "mi_discrete",
    "mi_mixed",
    "normalized_mi",
    "plugin_entropy",
    "synth_dataset",
]
