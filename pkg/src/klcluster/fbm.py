"""Fractional Brownian motion reference paths and a Hurst exponent estimator.

Paths are cumulative sums of fractional Gaussian noise (fGn) with unit
variance increments. The noise is synthesised exactly by circulant embedding
of the fGn autocovariance (Davies-Harte); the sequential Hosking recursion is
the fallback when the embedding has negative eigenvalues.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from klcluster.errors import DomainError, NumericError
from klcluster.series import RegularSeries

MIN_LENGTH = 16
# relative eigenvalue slack tolerated before declaring the embedding invalid
_EIG_RTOL = 1e-10


@dataclass(frozen=True)
class FbmSpec:
    hurst: float
    length: int
    seed: int = 0
    ensemble_size: int = 1

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise DomainError(f"hurst must lie in (0, 1), got {self.hurst}")
        if int(self.length) != self.length or self.length < MIN_LENGTH:
            raise DomainError(f"length must be an integer >= {MIN_LENGTH}, got {self.length}")
        if int(self.ensemble_size) != self.ensemble_size or self.ensemble_size < 1:
            raise DomainError(f"ensemble_size must be a positive integer, got {self.ensemble_size}")


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    """gamma(k) = (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2 for unit-variance fGn."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)


def circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    """Eigenvalues of the 2n circulant matrix embedding the n x n fGn covariance."""
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def _fgn_davies_harte(hurst, n, rng):
    lam = circulant_eigenvalues(hurst, n)
    if lam.min() < -_EIG_RTOL * lam.max():
        return None
    lam = np.clip(lam, 0.0, None)
    m = lam.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    # real part of the transform has exactly the embedded covariance
    return np.fft.fft(np.sqrt(lam / m) * z).real[:n]


def _fgn_hosking(hurst, n, rng):
    # Durbin-Levinson recursion on the fGn autocovariance, O(n^2)
    gamma = fgn_autocovariance(hurst, np.arange(n))
    z = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = z[0]
    phi = np.zeros(n)
    var = 1.0
    for t in range(1, n):
        prev = phi[: t - 1].copy()
        kappa = (gamma[t] - prev @ gamma[t - 1 : 0 : -1]) / var
        phi[: t - 1] = prev - kappa * prev[::-1]
        phi[t - 1] = kappa
        var *= 1.0 - kappa * kappa
        if var <= 0.0:
            raise NumericError(f"Hosking recursion lost positive definiteness at step {t}")
        out[t] = phi[:t] @ out[t - 1 :: -1] + np.sqrt(var) * z[t]
    return out


def generate_fgn(hurst: float, n: int, seed: int, method: str = "auto") -> np.ndarray:
    """Unit-variance fractional Gaussian noise of length ``n``.

    ``method`` is ``"auto"`` (circulant embedding, Hosking if the embedding
    fails), ``"davies-harte"`` or ``"hosking"``. For ``hurst == 0.5`` the
    increments are the i.i.d. standard normal draws of the seeded generator.
    """
    rng = np.random.default_rng(seed)
    if hurst == 0.5:
        return rng.standard_normal(n)
    if method in ("auto", "davies-harte"):
        noise = _fgn_davies_harte(hurst, n, rng)
        if noise is not None:
            return noise
        if method == "davies-harte":
            raise NumericError(f"circulant embedding is not nonnegative definite for H={hurst}, n={n}")
        rng = np.random.default_rng(seed)
    elif method != "hosking":
        raise DomainError(f"unknown fGn method {method!r}")
    return _fgn_hosking(hurst, n, rng)


def generate_fbm(spec: FbmSpec, method: str = "auto") -> RegularSeries:
    """One fBm path of ``spec.length`` samples from ``spec.seed``."""
    noise = generate_fgn(spec.hurst, int(spec.length), spec.seed, method=method)
    return RegularSeries(np.cumsum(noise), step_seconds=1.0, label=f"fbm(H={spec.hurst})")


def generate_ensemble(spec: FbmSpec, workers: int | None = None, method: str = "auto") -> list[RegularSeries]:
    """``spec.ensemble_size`` independent paths; path ``i`` uses seed ``spec.seed + i``.

    The result does not depend on ``workers`` or on completion order.
    """

    def one(i):
        return generate_fbm(FbmSpec(spec.hurst, spec.length, spec.seed + i), method=method)

    idx = range(int(spec.ensemble_size))
    if workers is None or workers <= 1:
        return [one(i) for i in idx]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, idx))


def estimate_hurst(series, max_lag: int = 64) -> float:
    """Hurst exponent from the scaling of the mean squared increment.

    Fits log E[(x_{t+tau} - x_t)^2] against log tau for tau = 1..max_lag by
    least squares and returns half the slope.
    """
    x = np.asarray(series.values if isinstance(series, RegularSeries) else series, dtype=float)
    if max_lag < 2:
        raise DomainError(f"max_lag must be >= 2, got {max_lag}")
    if x.size < 4 * max_lag:
        raise DomainError(f"series of length {x.size} is too short for max_lag={max_lag} (need {4 * max_lag})")
    lags = np.arange(1, max_lag + 1)
    msd = np.array([np.mean((x[lag:] - x[:-lag]) ** 2) for lag in lags])
    if np.any(msd <= 0.0):
        raise NumericError("mean squared increment vanishes; Hurst exponent undefined")
    slope = np.polyfit(np.log(lags), np.log(msd), 1)[0]
    return float(slope / 2.0)
