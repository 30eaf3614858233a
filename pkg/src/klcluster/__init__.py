"""Cluster entropy analysis of time series and entropy-based portfolio weights."""

from klcluster.errors import (
    DegenerateError,
    DomainError,
    KLClusterError,
    NumericError,
    ParseError,
    SupportError,
)
from klcluster.series import RegularSeries
from klcluster.fbm import FbmSpec, estimate_hurst, generate_ensemble, generate_fbm
from klcluster.clusters import (
    ClusterPartition,
    DurationDistribution,
    WindowSet,
    duration_distribution,
    fit_power_law_exponent,
    moving_average,
    segment_clusters,
)
from klcluster.entropy import (
    EntropyProfile,
    PowerLawPair,
    kl_closed_form_alpha,
    kl_closed_form_hurst,
    kl_cluster_entropy,
    kl_component,
    kl_integral_oracle,
    shannon_cluster_entropy,
    shannon_component,
)
from klcluster.weights import (
    DiversityIndex,
    WeightVector,
    kl_index,
    kl_weights,
    shannon_index,
    shannon_weights,
    uniform_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterPartition",
    "DegenerateError",
    "DiversityIndex",
    "DomainError",
    "DurationDistribution",
    "EntropyProfile",
    "FbmSpec",
    "KLClusterError",
    "NumericError",
    "ParseError",
    "PowerLawPair",
    "RegularSeries",
    "SupportError",
    "WeightVector",
    "WindowSet",
    "duration_distribution",
    "estimate_hurst",
    "fit_power_law_exponent",
    "generate_ensemble",
    "generate_fbm",
    "kl_closed_form_alpha",
    "kl_closed_form_hurst",
    "kl_cluster_entropy",
    "kl_component",
    "kl_index",
    "kl_integral_oracle",
    "kl_weights",
    "moving_average",
    "segment_clusters",
    "shannon_cluster_entropy",
    "shannon_component",
    "shannon_index",
    "shannon_weights",
    "uniform_weights",
]
