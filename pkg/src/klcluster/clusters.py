"""Moving-average coarse-graining of a series into clusters and their durations.

A cluster is the stretch between two successive intersections of the series
with its backward moving average. Only clusters closed on both sides are
kept; the segment before the first and after the last intersection are
censored and dropped.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import minimize_scalar

from klcluster.errors import DomainError, NumericError
from klcluster.series import RegularSeries

DEFAULT_WINDOWS = (50, 100, 150, 200)
NORMALIZATIONS = ("joint", "per-window")


def _values(series) -> np.ndarray:
    if isinstance(series, RegularSeries):
        return series.values
    return np.asarray(series, dtype=float)


@dataclass(frozen=True)
class WindowSet:
    windows: tuple[int, ...] = DEFAULT_WINDOWS

    def __post_init__(self):
        w = tuple(int(n) for n in self.windows)
        if not w:
            raise DomainError("window set is empty")
        if any(n < 2 for n in w):
            raise DomainError(f"moving-average windows must be >= 2, got {w}")
        if any(b <= a for a, b in zip(w, w[1:])):
            raise DomainError(f"windows must be strictly increasing, got {w}")
        object.__setattr__(self, "windows", w)

    @classmethod
    def parse(cls, text: str) -> WindowSet:
        try:
            return cls(tuple(int(tok) for tok in text.split(",") if tok.strip()))
        except ValueError as exc:
            raise DomainError(f"cannot parse window list {text!r}") from exc

    def check_length(self, length: int) -> None:
        if self.windows[-1] > length - 1:
            raise DomainError(f"window {self.windows[-1]} needs a series longer than {length} samples")

    def __iter__(self):
        return iter(self.windows)

    def __len__(self):
        return len(self.windows)


@dataclass(frozen=True)
class ClusterPartition:
    window: int
    durations: np.ndarray
    series_length: int = 0

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=np.int64)
        if d.size and d.min() < 1:
            raise DomainError("cluster durations must be positive")
        if self.series_length and d.sum() > self.series_length:
            raise DomainError("durations exceed the series length")
        object.__setattr__(self, "durations", d)

    @property
    def cluster_count(self) -> int:
        return int(self.durations.size)


@dataclass(frozen=True)
class DurationDistribution:
    """Cluster counts N(tau, n) and the probability mass built from them.

    With ``normalization="joint"`` the mass of a cell is N(tau, n) / N_C with
    N_C the total cluster count over all windows, so the masses sum to one.
    With ``"per-window"`` each window is normalised by its own N_C(n) and the
    masses sum to one within every window.
    """

    counts: Mapping[tuple[int, int], int]
    normalization: str = "joint"
    entries: dict[tuple[int, int], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise DomainError(f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}")
        counts = {(int(n), int(t)): int(c) for (n, t), c in sorted(self.counts.items()) if c}
        if any(c < 0 for c in counts.values()):
            raise DomainError("cluster counts must be nonnegative")
        if not counts:
            raise DomainError("no clusters: the duration distribution is undefined")
        object.__setattr__(self, "counts", counts)
        totals = self.window_totals()
        grand = sum(totals.values())
        if self.normalization == "joint":
            entries = {k: c / grand for k, c in counts.items()}
        else:
            entries = {k: c / totals[k[0]] for k, c in counts.items()}
        object.__setattr__(self, "entries", entries)

    @property
    def total_clusters(self) -> int:
        return sum(self.counts.values())

    @property
    def windows(self) -> tuple[int, ...]:
        return tuple(sorted({n for n, _ in self.counts}))

    def window_totals(self) -> dict[int, int]:
        totals: dict[int, int] = {}
        for (n, _), c in self.counts.items():
            totals[n] = totals.get(n, 0) + c
        return totals

    def mass(self, n: int, tau: int) -> float:
        return self.entries.get((n, tau), 0.0)

    def renormalized(self, normalization: str) -> DurationDistribution:
        return DurationDistribution(self.counts, normalization)

    def __len__(self):
        return len(self.counts)


def moving_average(series, n: int) -> RegularSeries:
    """Backward moving average over ``n`` samples.

    Output sample ``k`` averages input samples ``k .. k + n - 1`` and is
    aligned with input index ``k + n - 1``; the output has ``N - n + 1``
    samples.
    """
    x = _values(series)
    if n < 1 or n > x.size:
        raise DomainError(f"moving-average window {n} outside [1, {x.size}]")
    if n == 1:
        avg = x.copy()
    else:
        avg = sliding_window_view(x, n).sum(axis=1) / n
    if isinstance(series, RegularSeries):
        return series.with_values(avg, offset=n - 1)
    return RegularSeries(avg)


def crossing_indices(residual: np.ndarray) -> np.ndarray:
    """Indices where the residual crosses or touches zero.

    A sign change between samples ``i - 1`` and ``i`` is placed at ``i``; a
    run of exact zeros counts once, at its first sample.
    """
    s = np.sign(residual)
    prev, cur = s[:-1], s[1:]
    flip = (prev * cur < 0) | ((cur == 0) & (prev != 0))
    idx = np.flatnonzero(flip) + 1
    if s.size and s[0] == 0:
        idx = np.concatenate([[0], idx])
    return idx


def segment_clusters(series, n: int) -> ClusterPartition:
    """Clusters formed by the intersections of ``series`` with its ``n``-sample moving average."""
    x = _values(series)
    if n < 2 or n > x.size - 1:
        raise DomainError(f"window {n} outside [2, {x.size - 1}]")
    if x.size - n + 1 < 3:
        raise DomainError(f"overlap of series and {n}-sample average is shorter than 3 samples")
    residual = x[n - 1 :] - moving_average(x, n).values
    durations = np.diff(crossing_indices(residual))
    return ClusterPartition(window=n, durations=durations, series_length=x.size)


def segment_all(series, windows: Iterable[int]) -> list[ClusterPartition]:
    return [segment_clusters(series, n) for n in windows]


def duration_distribution(
    partitions: Sequence[ClusterPartition], normalization: str = "joint"
) -> DurationDistribution:
    """Count clusters per (window, duration) and normalise them."""
    counts: Counter = Counter()
    for part in partitions:
        taus, k = np.unique(part.durations, return_counts=True)
        for tau, c in zip(taus.tolist(), k.tolist()):
            counts[(part.window, tau)] += c
    if not counts:
        raise DomainError("no clusters: the duration distribution is undefined")
    return DurationDistribution(dict(counts), normalization)


def pooled_distribution(paths, windows, normalization: str = "joint") -> DurationDistribution:
    """Duration distribution pooling the clusters of several series."""
    parts = [p for path in paths for p in segment_all(path, windows)]
    return duration_distribution(parts, normalization)


def fit_power_law_exponent(durations, tau_min: int = 1, tau_max: int | None = None) -> float:
    """Maximum-likelihood exponent of a discrete power law on ``[tau_min, tau_max)``.

    The model is p(tau) = tau^-alpha / Z(alpha) with Z summed over the
    integers of the fitting range.
    """
    d = np.asarray(durations, dtype=np.int64)
    if tau_max is None:
        tau_max = int(d.max()) + 1 if d.size else tau_min + 1
    if tau_max - tau_min < 2:
        raise DomainError(f"fitting range [{tau_min}, {tau_max}) holds fewer than two support points")
    d = d[(d >= tau_min) & (d < tau_max)]
    if d.size < 2:
        raise DomainError("fewer than two durations inside the fitting range")
    support = np.log(np.arange(tau_min, tau_max, dtype=float))
    sum_log = np.log(d.astype(float)).sum()

    def nll(alpha):
        # log-sum-exp keeps the normaliser finite for large alpha
        a = -alpha * support
        top = a.max()
        return alpha * sum_log + d.size * (top + np.log(np.exp(a - top).sum()))

    res = minimize_scalar(nll, bounds=(1e-6, 10.0), method="bounded", options={"xatol": 1e-10})
    if not res.success:
        raise NumericError(f"power-law likelihood maximisation failed: {res.message}")
    return float(res.x)
