"""Diversity indices from entropy profiles and the per-asset weight vectors built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from klcluster.entropy import EntropyProfile
from klcluster.errors import DegenerateError, DomainError

SCHEMES = ("kl", "shannon", "uniform", "sharpe", "published")
SUM_ATOL = 1e-9


@dataclass(frozen=True)
class DiversityIndex:
    """Scalar reduction of an entropy profile for one asset.

    ``short_scale`` sums the components with duration below the split
    (tau < n for window n), ``long_scale`` the rest. ``value`` is the total.
    """

    kind: str
    value: float
    asset_id: str = ""
    horizon_months: int = 1
    volatility_window_seconds: int = 0
    short_scale: float = 0.0
    long_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("kl", "shannon"):
            raise DomainError(f"index kind must be 'kl' or 'shannon', got {self.kind!r}")
        if self.value < 0.0 or math.isnan(self.value):
            raise DomainError(f"diversity index must be nonnegative, got {self.value}")
        if self.horizon_months < 1:
            raise DomainError(f"horizon must be at least one month, got {self.horizon_months}")


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative per-asset weights summing to one.

    ``atol`` is the tolerance on the unit sum; it is relaxed only for weights
    transcribed from printed tables (scheme ``"published"``).
    """

    weights: Mapping[str, float]
    scheme: str
    atol: float = SUM_ATOL

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown weight scheme {self.scheme!r}")
        w = {str(k): float(v) for k, v in self.weights.items()}
        if not w:
            raise DomainError("weight vector is empty")
        bad = {k: v for k, v in w.items() if not v >= 0.0}
        if bad:
            raise DomainError(f"weights must be nonnegative, got {bad}")
        total = math.fsum(w.values())
        if abs(total - 1.0) > self.atol:
            raise DomainError(f"weights sum to {total!r}, not 1 within {self.atol:g}")
        object.__setattr__(self, "weights", w)

    @property
    def assets(self) -> tuple[str, ...]:
        return tuple(self.weights)

    def __getitem__(self, asset):
        return self.weights[asset]

    def __len__(self):
        return len(self.weights)

    def as_array(self, assets: Sequence[str]) -> np.ndarray:
        missing = [a for a in assets if a not in self.weights]
        if missing:
            raise DomainError(f"weights missing for assets {missing}")
        return np.array([self.weights[a] for a in assets])

    @classmethod
    def from_array(cls, assets: Sequence[str], values, scheme: str, atol: float = SUM_ATOL) -> WeightVector:
        return cls(dict(zip(assets, np.asarray(values, dtype=float).tolist())), scheme, atol)


def _split_sums(profile: EntropyProfile, tau_split: Mapping[int, int] | None):
    short, long_ = [], []
    for (n, tau), v in profile.components.items():
        m = n if tau_split is None else tau_split.get(n, n)
        (short if tau < m else long_).append(v)
    return math.fsum(short), math.fsum(long_)


def _index(kind, profile, tau_split, asset_id, horizon_months, volatility_window_seconds, clamp):
    if profile.kind != kind:
        raise DomainError(f"expected a {kind} profile, got {profile.kind}")
    short, long_ = _split_sums(profile, tau_split)
    # the total is summed directly so it equals the profile aggregate exactly
    value = math.fsum(profile.components.values())
    if -clamp <= value < 0.0:
        value = 0.0
    return DiversityIndex(
        kind, value, asset_id, horizon_months, volatility_window_seconds, short_scale=short, long_scale=long_
    )


def kl_index(
    profile: EntropyProfile,
    tau_split: Mapping[int, int] | None = None,
    asset_id: str = "",
    horizon_months: int = 1,
    volatility_window_seconds: int = 0,
) -> DiversityIndex:
    """Relative cluster entropy index: the component sum over durations below
    and above the split tau_m (default tau_m = n), counted once each.

    Totals in [-1e-9, 0) from rounding are reported as 0.
    """
    return _index("kl", profile, tau_split, asset_id, horizon_months, volatility_window_seconds, 1e-9)


def shannon_index(
    profile: EntropyProfile,
    tau_split: Mapping[int, int] | None = None,
    asset_id: str = "",
    horizon_months: int = 1,
    volatility_window_seconds: int = 0,
) -> DiversityIndex:
    """Cluster entropy index, split like :func:`kl_index`."""
    return _index("shannon", profile, tau_split, asset_id, horizon_months, volatility_window_seconds, 0.0)


def _labels(indices):
    labels = [ix.asset_id or f"asset{i}" for i, ix in enumerate(indices)]
    if len(set(labels)) != len(labels):
        raise DomainError(f"duplicate asset labels {labels}")
    return labels


def kl_weights(indices: Sequence[DiversityIndex], floor: float | None = None) -> WeightVector:
    """Weights proportional to the reciprocal KL index.

    A zero index makes the reciprocal undefined and raises
    :class:`DegenerateError` unless ``floor`` is given, in which case indices
    below ``floor`` are raised to it.
    """
    if len(indices) < 2:
        raise DomainError("at least two assets are needed to form weights")
    if any(ix.kind != "kl" for ix in indices):
        raise DomainError("kl_weights needs KL indices")
    values = np.array([ix.value for ix in indices], dtype=float)
    if floor is not None:
        if not floor > 0.0:
            raise DomainError(f"floor must be positive, got {floor}")
        values = np.maximum(values, floor)
    zero = [ix.asset_id for ix, v in zip(indices, values) if v <= 0.0]
    if zero:
        raise DegenerateError(f"KL index is zero for {zero}; reciprocal weights undefined")
    inv = 1.0 / values
    return WeightVector.from_array(_labels(indices), inv / inv.sum(), "kl")


def shannon_weights(indices: Sequence[DiversityIndex]) -> WeightVector:
    """Weights proportional to the Shannon index."""
    if len(indices) < 2:
        raise DomainError("at least two assets are needed to form weights")
    if any(ix.kind != "shannon" for ix in indices):
        raise DomainError("shannon_weights needs Shannon indices")
    values = np.array([ix.value for ix in indices], dtype=float)
    total = values.sum()
    if total <= 0.0:
        raise DegenerateError("all Shannon indices are zero")
    return WeightVector.from_array(_labels(indices), values / total, "shannon")


def uniform_weights(asset_count_or_assets) -> WeightVector:
    """Equal weights over ``n`` assets (labelled asset0..) or over the given labels."""
    if isinstance(asset_count_or_assets, int):
        if asset_count_or_assets < 1:
            raise DomainError(f"asset count must be positive, got {asset_count_or_assets}")
        assets = [f"asset{i}" for i in range(asset_count_or_assets)]
    else:
        assets = list(asset_count_or_assets)
        if not assets:
            raise DomainError("asset list is empty")
    n = len(assets)
    return WeightVector({a: 1.0 / n for a in assets}, "uniform")
