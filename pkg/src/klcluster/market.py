"""Tick ingestion, regular resampling, returns and realized volatility."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from klcluster.errors import DomainError, ParseError
from klcluster.series import RegularSeries

DEFAULT_VOL_WINDOWS = (180, 360, 720)


@dataclass(frozen=True)
class TickSeries:
    timestamps: np.ndarray
    prices: np.ndarray
    asset_id: str = ""
    currency: str = "USD"

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = np.asarray(self.prices, dtype=float)
        if ts.shape != px.shape or ts.ndim != 1:
            raise DomainError("timestamps and prices must be 1-D and of equal length")
        if ts.size == 0:
            raise DomainError("tick series is empty")
        if np.any(~(px > 0)):
            raise DomainError("tick prices must be positive")
        back = np.flatnonzero(np.diff(ts) < 0)
        if back.size:
            i = back[0]
            raise DomainError(f"timestamps decrease: {ts[i]} followed by {ts[i + 1]}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)

    def __len__(self):
        return self.timestamps.size


@dataclass(frozen=True)
class VolatilityConfig:
    window_seconds: int = 180
    resample_seconds: int = 1
    horizon_months: int = 1
    session: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        if self.resample_seconds < 1:
            raise DomainError(f"resample interval must be >= 1 s, got {self.resample_seconds}")
        if self.window_seconds // self.resample_seconds < 2:
            raise DomainError("volatility window must span at least two resampled returns")
        if self.horizon_months < 1:
            raise DomainError(f"horizon must be at least one month, got {self.horizon_months}")

    @property
    def window_samples(self) -> int:
        return self.window_seconds // self.resample_seconds


def load_ticks(path, asset_id: str | None = None, currency: str = "USD") -> TickSeries:
    """Read a ``timestamp,price`` CSV (UNIX seconds, decimal price)."""
    path = Path(path)
    ts, px = [], []
    prev = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DomainError(f"{path}: empty tick file")
        if [h.strip() for h in header] != ["timestamp", "price"]:
            raise ParseError(f"expected header 'timestamp,price', got {','.join(header)!r}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", path, lineno)
            try:
                t = int(row[0])
                p = float(row[1])
            except ValueError as exc:
                raise ParseError(f"malformed row {row!r}", path, lineno) from exc
            if not p > 0 or not np.isfinite(p):
                raise ParseError(f"price must be positive, got {row[1]!r}", path, lineno)
            if prev is not None and t < prev:
                raise ParseError(f"timestamps out of order: {prev} then {t}", path, lineno)
            prev = t
            ts.append(t)
            px.append(p)
    if not ts:
        raise DomainError(f"{path}: tick file has no data rows")
    return TickSeries(np.array(ts), np.array(px), asset_id or path.stem, currency)


def resample(ticks: TickSeries, delta_seconds: int, session: tuple[int, int] | None = None) -> RegularSeries:
    """Last-observation-carried-forward prices on a grid of step ``delta_seconds``.

    The grid runs from the first tick to the last one. With ``session`` =
    (open, close) in seconds after UTC midnight, grid points outside
    [open, close) are dropped; the result then keeps the grid step but is no
    longer contiguous in time.
    """
    if delta_seconds < 1 or int(delta_seconds) != delta_seconds:
        raise DomainError(f"resample interval must be a positive integer, got {delta_seconds}")
    if len(ticks) == 0:
        raise DomainError("cannot resample an empty tick series")
    t0, t1 = int(ticks.timestamps[0]), int(ticks.timestamps[-1])
    grid = np.arange(t0, t1 + 1, int(delta_seconds), dtype=np.int64)
    pos = np.searchsorted(ticks.timestamps, grid, side="right") - 1
    values = ticks.prices[pos]
    if session is not None:
        open_s, close_s = session
        tod = grid % 86400
        keep = (tod >= open_s) & (tod < close_s)
        if not keep.any():
            raise DomainError("session filter removed every grid point")
        values = values[keep]
        t0 = int(grid[keep][0])
    return RegularSeries(values, step_seconds=float(delta_seconds), origin_timestamp=t0, label=ticks.asset_id)


def _as_series(x) -> RegularSeries:
    return x if isinstance(x, RegularSeries) else RegularSeries(x)


def log_returns(prices) -> RegularSeries:
    """r_t = log p_t - log p_{t-1}; one sample shorter than the prices."""
    prices = _as_series(prices)
    p = prices.values
    if p.size < 2:
        raise DomainError("need at least two prices for a return")
    if np.any(~(p > 0)):
        raise DomainError("prices must be positive")
    return prices.with_values(np.diff(np.log(p)), offset=1)


def _check_window(returns, window):
    if window < 2:
        raise DomainError(f"window must be >= 2, got {window}")
    if len(returns) < window:
        raise DomainError(f"series of {len(returns)} returns is shorter than the window {window}")


def expected_return(returns, window: int) -> RegularSeries:
    """Rolling mean of ``window`` consecutive returns, one value per complete window."""
    returns = _as_series(returns)
    _check_window(returns, window)
    mu = pd.Series(returns.values).rolling(window).mean().to_numpy()[window - 1 :]
    return returns.with_values(mu, offset=window - 1)


def realized_volatility(returns, window: int) -> RegularSeries:
    """Rolling sample standard deviation (divisor window - 1) of ``window`` returns.

    Output sample k covers returns k .. k + window - 1 and is stamped at the
    window's last return.
    """
    returns = _as_series(returns)
    _check_window(returns, window)
    var = pd.Series(returns.values).rolling(window).var(ddof=1).to_numpy()[window - 1 :]
    sigma = np.sqrt(np.clip(var, 0.0, None))
    return returns.with_values(sigma, offset=window - 1)


def volatility_from_ticks(ticks: TickSeries, config: VolatilityConfig) -> RegularSeries:
    prices = resample(ticks, config.resample_seconds, config.session)
    return realized_volatility(log_returns(prices), config.window_samples)
