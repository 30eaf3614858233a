"""Sharpe-ratio baseline and the lazy/active multi-period portfolio simulator.

Monthly valuation convention: the position held during month m is valued at
the price quoted at the start of month m + 1. Month 12 has no following
quote in a 12-month panel, so it is valued at p_12.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from klcluster.errors import DegenerateError, DomainError
from klcluster.weights import WeightVector

MONTHS = 12


@dataclass(frozen=True)
class PricePanel:
    """Monthly prices, one row per asset and one column per month."""

    assets: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        assets = tuple(str(a) for a in self.assets)
        p = np.asarray(self.prices, dtype=float)
        if p.ndim != 2 or p.shape[0] != len(assets):
            raise DomainError(f"price grid shape {p.shape} does not match {len(assets)} assets")
        if p.shape[1] < 1:
            raise DomainError("price panel has no months")
        if len(set(assets)) != len(assets):
            raise DomainError(f"duplicate assets in panel: {assets}")
        if np.any(~(p > 0)):
            raise DomainError("panel prices must be positive")
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "prices", p)

    @property
    def months(self) -> int:
        return self.prices.shape[1]

    def price(self, asset: str, month: int) -> float:
        return float(self.prices[self.assets.index(asset), month - 1])

    def valuation_prices(self) -> np.ndarray:
        """Price used to value month m: p_{m+1}, and p_12 for the last month."""
        return np.concatenate([self.prices[:, 1:], self.prices[:, -1:]], axis=1)


@dataclass(frozen=True)
class ReturnPanel:
    """Aligned per-asset return series, one column per asset."""

    assets: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        if r.ndim != 2 or r.shape[1] != len(self.assets):
            raise DomainError(f"return matrix shape {r.shape} does not match {len(self.assets)} assets")
        if r.shape[0] < 2:
            raise DomainError("return panel needs at least two observations")
        if not np.all(np.isfinite(r)):
            raise DomainError("return panel contains non-finite values")
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))
        object.__setattr__(self, "returns", r)

    @classmethod
    def from_series(cls, series: Mapping[str, Sequence[float]]) -> ReturnPanel:
        lengths = {len(v) for v in series.values()}
        if len(lengths) != 1:
            raise DomainError(f"return series have unequal lengths {sorted(lengths)}")
        return cls(tuple(series), np.column_stack([np.asarray(v, dtype=float) for v in series.values()]))

    def moments(self):
        mu = self.returns.mean(axis=0)
        cov = np.atleast_2d(np.cov(self.returns, rowvar=False, ddof=1))
        return mu, cov


@dataclass(frozen=True)
class PortfolioTrajectory:
    strategy: str
    scheme: str
    assets: tuple[str, ...]
    wealth: np.ndarray  # assets x months, USD
    initial_wealth: float

    @property
    def totals(self) -> np.ndarray:
        return self.wealth.sum(axis=0)

    @property
    def per_month(self) -> dict[tuple[str, int], float]:
        return {(a, m + 1): float(self.wealth[i, m]) for i, a in enumerate(self.assets) for m in range(self.wealth.shape[1])}


@dataclass(frozen=True)
class ProfitReport:
    monthly: np.ndarray
    year: float


def _portfolio_returns(w, panel):
    return panel.returns @ w


def sharpe_ratio(weights, panel: ReturnPanel) -> float:
    """Mean over sample standard deviation of the weighted portfolio return; no risk-free rate."""
    w = weights.as_array(panel.assets) if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    rp = _portfolio_returns(w, panel)
    sd = rp.std(ddof=1)
    if not sd > 0.0:
        raise DegenerateError("portfolio return has zero variance; Sharpe ratio undefined")
    return float(rp.mean() / sd)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of 1/steps, lexicographic order."""
    rows = []
    for head in itertools.product(range(steps + 1), repeat=dim - 1):
        s = sum(head)
        if s <= steps:
            rows.append((*head, steps - s))
    return np.array(rows, dtype=float) / steps


def grid_sharpe(mu, cov, grid) -> np.ndarray:
    mean = grid @ mu
    var = np.einsum("ij,jk,ik->i", grid, cov, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = mean / np.sqrt(var)
    s[~(var > 0)] = -np.inf
    return s


def _coarse_steps(dim):
    # keeps the coarse grid to a few thousand points
    for steps in (20, 10, 5, 4, 3, 2, 1):
        if math.comb(steps + dim - 1, dim - 1) <= 5000:
            return steps
    return 1


def maximize_sharpe(panel: ReturnPanel, tol: float = 1e-12, max_iter: int = 20000) -> WeightVector:
    """Long-only weights maximizing the Sharpe ratio.

    The best point of a coarse simplex grid (ties resolved to the
    lexicographically smallest) and the uniform vector seed a projected
    gradient ascent with backtracking; the better end point is returned.
    """
    mu, cov = panel.moments()
    dim = len(panel.assets)
    if np.all(np.ptp(panel.returns, axis=0) == 0.0):
        raise DegenerateError("every asset has zero return variance")
    if dim == 1:
        return WeightVector({panel.assets[0]: 1.0}, "sharpe")

    def f(w):
        var = w @ cov @ w
        return -np.inf if var <= 0.0 else (w @ mu) / math.sqrt(var)

    def grad(w):
        var = w @ cov @ w
        sd = math.sqrt(var)
        return mu / sd - (w @ mu) * (cov @ w) / (var * sd)

    grid = simplex_grid(dim, _coarse_steps(dim))
    scores = grid_sharpe(mu, cov, grid)
    starts = [grid[int(np.argmax(scores))], np.full(dim, 1.0 / dim)]
    best_w, best_f = None, -np.inf
    for w in starts:
        fw = f(w)
        if not np.isfinite(fw):
            continue
        step = 1.0
        for _ in range(max_iter):
            g = grad(w)
            while True:
                cand = project_simplex(w + step * g)
                fc = f(cand)
                if fc >= fw + 1e-4 * g @ (cand - w) or step < 1e-14:
                    break
                step *= 0.5
            moved = np.abs(cand - w).max()
            improved = fc - fw
            if fc >= fw:
                w, fw = cand, fc
            step = min(step * 2.0, 1e6)
            if moved < tol or 0 <= improved < tol * 1e-3:
                break
        if fw > best_f + 1e-15:
            best_w, best_f = w, fw
    if best_w is None:
        raise DegenerateError("no portfolio on the simplex has positive variance")
    best_w = np.where(best_w < 1e-15, 0.0, best_w)
    return WeightVector.from_array(panel.assets, best_w / best_w.sum(), "sharpe")


def _weight_matrix(weights_by_month, assets, months):
    if len(weights_by_month) != months:
        raise DomainError(f"expected {months} monthly weight vectors, got {len(weights_by_month)}")
    return np.column_stack([w.as_array(assets) for w in weights_by_month])


def _check_wealth(initial_wealth):
    if not initial_wealth > 0:
        raise DomainError(f"initial wealth must be positive, got {initial_wealth}")


def simulate_lazy(weights_month1: WeightVector, panel: PricePanel, initial_wealth: float) -> PortfolioTrajectory:
    """Buy at month-1 prices with ``weights_month1`` and hold the shares all year."""
    _check_wealth(initial_wealth)
    w = weights_month1.as_array(panel.assets)
    shares = initial_wealth * w / panel.prices[:, 0]
    wealth = shares[:, None] * panel.valuation_prices()
    return PortfolioTrajectory("lazy", weights_month1.scheme, panel.assets, wealth, float(initial_wealth))


def simulate_active(
    weights_by_month: Sequence[WeightVector], panel: PricePanel, initial_wealth: float
) -> PortfolioTrajectory:
    """Each month re-invest ``initial_wealth`` by that month's weights at that month's prices."""
    _check_wealth(initial_wealth)
    w = _weight_matrix(weights_by_month, panel.assets, panel.months)
    wealth = initial_wealth * w * panel.valuation_prices() / panel.prices
    schemes = {wv.scheme for wv in weights_by_month}
    scheme = schemes.pop() if len(schemes) == 1 else "mixed"
    return PortfolioTrajectory("active", scheme, panel.assets, wealth, float(initial_wealth))


def profit_report(trajectory: PortfolioTrajectory) -> ProfitReport:
    """Monthly profit against the initial wealth and their sum over the year."""
    monthly = trajectory.totals - trajectory.initial_wealth
    return ProfitReport(monthly, float(math.fsum(monthly)))
