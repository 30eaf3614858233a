"""FastAPI application wrapping the analysis core.

Domain and parse errors map to HTTP 422, numeric failures to 409.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from klcluster import __version__
from klcluster.clusters import DurationDistribution, WindowSet, pooled_distribution
from klcluster.entropy import (
    PowerLawPair,
    kl_closed_form_alpha,
    kl_cluster_entropy,
    shannon_cluster_entropy,
)
from klcluster.errors import DomainError, KLClusterError, NumericError
from klcluster.fbm import FbmSpec, generate_ensemble, generate_fbm
from klcluster.market import TickSeries, log_returns, realized_volatility, resample
from klcluster.portfolio import PricePanel, profit_report, simulate_active, simulate_lazy
from klcluster.series import RegularSeries
from klcluster.service import schemas as s
from klcluster.weights import DiversityIndex, WeightVector, kl_index, kl_weights, shannon_index, shannon_weights, uniform_weights


def _distribution(model: s.DistributionModel) -> DurationDistribution:
    return DurationDistribution({(c.n, c.tau): c.count for c in model.cells}, model.normalization)


def _cells(dist: DurationDistribution) -> list[s.Cell]:
    return [s.Cell(n=n, tau=t, count=c, probability=dist.entries[(n, t)]) for (n, t), c in dist.counts.items()]


def create_app() -> FastAPI:
    app = FastAPI(title="klcluster", version=__version__)

    @app.exception_handler(KLClusterError)
    async def _domain_error(request: Request, exc: KLClusterError):
        status = 409 if isinstance(exc, NumericError) else 422
        return JSONResponse(status_code=status, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/fbm", response_model=s.SeriesResponse)
    def fbm(req: s.FbmRequest):
        series = generate_fbm(FbmSpec(req.hurst, req.length, req.seed), method=req.method)
        return s.SeriesResponse(values=series.values.tolist())

    @app.post("/volatility", response_model=s.SeriesResponse)
    def volatility(req: s.VolatilityRequest):
        ticks = TickSeries([t.timestamp for t in req.ticks], [t.price for t in req.ticks])
        vol = realized_volatility(log_returns(resample(ticks, req.delta)), req.window // req.delta)
        return s.SeriesResponse(
            values=vol.values.tolist(), step_seconds=vol.step_seconds, origin_timestamp=vol.origin_timestamp
        )

    @app.post("/clusters", response_model=s.DistributionModel)
    def clusters(req: s.ClustersRequest):
        windows = WindowSet(tuple(req.windows))
        windows.check_length(len(req.values))
        dist = pooled_distribution([RegularSeries(np.asarray(req.values))], windows, req.normalization)
        return s.DistributionModel(normalization=dist.normalization, cells=_cells(dist))

    @app.post("/entropy", response_model=s.ProfileResponse)
    def entropy(req: s.EntropyRequest):
        P = _distribution(req.p)
        if req.kind == "shannon":
            profile = shannon_cluster_entropy(P)
            index = shannon_index(profile)
        else:
            if req.q is not None:
                Q = _distribution(req.q).renormalized(P.normalization)
            elif req.reference is not None:
                ref = req.reference
                windows = WindowSet(tuple(ref.windows) if ref.windows else P.windows)
                windows.check_length(ref.length)
                paths = generate_ensemble(FbmSpec(ref.hurst, ref.length, ref.seed, ref.ensemble_size))
                Q = pooled_distribution(paths, windows, P.normalization)
            else:
                raise DomainError("kl entropy needs either q or a reference specification")
            profile = kl_cluster_entropy(P, Q, req.max_discarded)
            index = kl_index(profile)
        comps = [s.Component(n=n, tau=t, value=v) for (n, t), v in profile.components.items()]
        return s.ProfileResponse(
            kind=profile.kind,
            components=comps,
            aggregate=profile.aggregate,
            discarded_mass=profile.discarded_mass,
            index=index.value,
        )

    @app.post("/closed-form", response_model=s.ClosedFormResponse)
    def closed_form(req: s.ClosedFormRequest):
        if req.h1 is not None and req.h2 is not None:
            pair = PowerLawPair.from_hurst(req.h1, req.h2)
        elif req.alpha1 is not None and req.alpha2 is not None:
            pair = PowerLawPair(req.alpha1, req.alpha2)
        else:
            raise DomainError("give either h1 and h2 or alpha1 and alpha2")
        return s.ClosedFormResponse(alpha1=pair.alpha1, alpha2=pair.alpha2, divergence=kl_closed_form_alpha(pair))

    @app.post("/weights", response_model=s.WeightsResponse)
    def weights(req: s.WeightsRequest):
        if req.scheme == "uniform":
            w = uniform_weights([e.asset for e in req.indices])
        else:
            indices = [DiversityIndex(req.scheme, e.value, asset_id=e.asset) for e in req.indices]
            w = kl_weights(indices, req.floor) if req.scheme == "kl" else shannon_weights(indices)
        return s.WeightsResponse(scheme=w.scheme, weights=dict(w.weights))

    @app.post("/portfolio", response_model=s.PortfolioResponse)
    def portfolio(req: s.PortfolioRequest):
        panel = PricePanel(tuple(req.assets), np.asarray(req.prices, dtype=float))
        wbm = [WeightVector(w, req.scheme, req.weight_atol) for w in req.weights_by_month]
        if req.strategy == "lazy":
            traj = simulate_lazy(wbm[0], panel, req.wealth)
        else:
            if len(wbm) == 1:
                wbm = wbm * panel.months
            traj = simulate_active(wbm, panel, req.wealth)
        rep = profit_report(traj)
        return s.PortfolioResponse(
            strategy=traj.strategy,
            assets=list(traj.assets),
            wealth=traj.wealth.tolist(),
            totals=traj.totals.tolist(),
            monthly_profit=rep.monthly.tolist(),
            year_profit=rep.year,
        )

    return app


app = create_app()
