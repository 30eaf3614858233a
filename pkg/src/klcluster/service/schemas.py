"""Request and response bodies of the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from klcluster.clusters import DEFAULT_WINDOWS
from klcluster.entropy import DEFAULT_MAX_DISCARDED


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FbmRequest(_Model):
    hurst: float = Field(gt=0.0, lt=1.0)
    length: int = Field(ge=16, le=1 << 22)
    seed: int = 0
    method: Literal["auto", "davies-harte", "hosking"] = "auto"


class SeriesResponse(_Model):
    values: list[float]
    step_seconds: float = 1.0
    origin_timestamp: int = 0


class Cell(_Model):
    n: int
    tau: int
    count: int
    probability: float


class ClustersRequest(_Model):
    values: list[float] = Field(min_length=3)
    windows: list[int] = Field(default_factory=lambda: list(DEFAULT_WINDOWS))
    normalization: Literal["joint", "per-window"] = "joint"


class DistributionModel(_Model):
    normalization: Literal["joint", "per-window"] = "joint"
    cells: list[Cell]


class ReferenceSpec(_Model):
    hurst: float = Field(0.5, gt=0.0, lt=1.0)
    length: int = Field(ge=16)
    ensemble_size: int = Field(10, ge=1, le=1000)
    seed: int = 0
    windows: list[int] | None = None


class EntropyRequest(_Model):
    kind: Literal["kl", "shannon"]
    p: DistributionModel
    q: DistributionModel | None = None
    reference: ReferenceSpec | None = None
    max_discarded: float = Field(DEFAULT_MAX_DISCARDED, ge=0.0, le=1.0)


class Component(_Model):
    n: int
    tau: int
    value: float


class ProfileResponse(_Model):
    kind: str
    components: list[Component]
    aggregate: float
    discarded_mass: float
    index: float


class ClosedFormRequest(_Model):
    h1: float | None = Field(None, gt=0.0, lt=1.0)
    h2: float | None = Field(None, gt=0.0, lt=1.0)
    alpha1: float | None = Field(None, gt=1.0)
    alpha2: float | None = Field(None, gt=1.0)


class ClosedFormResponse(_Model):
    alpha1: float
    alpha2: float
    divergence: float


class IndexEntry(_Model):
    asset: str
    value: float = Field(ge=0.0)


class WeightsRequest(_Model):
    scheme: Literal["kl", "shannon", "uniform"]
    indices: list[IndexEntry] = Field(min_length=1)
    floor: float | None = Field(None, gt=0.0)


class WeightsResponse(_Model):
    scheme: str
    weights: dict[str, float]


class Tick(_Model):
    timestamp: int
    price: float = Field(gt=0.0)


class VolatilityRequest(_Model):
    ticks: list[Tick] = Field(min_length=2)
    delta: int = Field(1, ge=1)
    window: int = Field(180, ge=2)


class PortfolioRequest(_Model):
    assets: list[str] = Field(min_length=1)
    prices: list[list[float]]
    weights_by_month: list[dict[str, float]] = Field(min_length=1)
    strategy: Literal["lazy", "active"]
    scheme: Literal["kl", "shannon", "uniform", "sharpe", "published"] = "published"
    wealth: float = Field(500000.0, gt=0.0)
    weight_atol: float = Field(1e-9, gt=0.0, le=1e-2)


class PortfolioResponse(_Model):
    strategy: str
    assets: list[str]
    wealth: list[list[float]]
    totals: list[float]
    monthly_profit: list[float]
    year_profit: float


class ErrorResponse(_Model):
    error: str
    detail: str
