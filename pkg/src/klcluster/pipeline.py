"""End-to-end run: volatility, clustering, entropy, indices, weights and portfolios.

A run is described by a :class:`RunConfig`, usually read from a flat
``key = value`` file. Every output file is listed with its SHA-256 digest in
``manifest.json``, which is written last; the manifest holds no timestamps,
so identical configurations give byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from klcluster import io
from klcluster.clusters import WindowSet, pooled_distribution
from klcluster.entropy import DEFAULT_MAX_DISCARDED, kl_cluster_entropy, shannon_cluster_entropy
from klcluster.errors import DomainError, KLClusterError
from klcluster.fbm import FbmSpec, generate_ensemble, generate_fbm
from klcluster.market import load_ticks, log_returns, realized_volatility, resample
from klcluster.portfolio import profit_report, simulate_active, simulate_lazy
from klcluster.series import RegularSeries
from klcluster.weights import kl_index, kl_weights, shannon_index, shannon_weights, uniform_weights

log = logging.getLogger(__name__)

SYNTHETIC_PREFIX = "fbm:"


class PipelineError(KLClusterError):
    """A stage failed; ``exit_code`` follows the underlying error."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        super().__init__(f"stage {stage!r} failed: {cause}")


def _int_list(text) -> tuple[int, ...]:
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok:
            lo, hi = tok.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(tok))
    return tuple(out)


@dataclass(frozen=True)
class RunConfig:
    assets: dict[str, str]
    out_dir: Path = Path("out")
    windows: WindowSet = field(default_factory=WindowSet)
    vol_windows: tuple[int, ...] = (180,)
    delta: int = 1
    horizons: tuple[int, ...] = tuple(range(1, 13))
    reference_hurst: float = 0.5
    ensemble_size: int = 10
    seed: int = 0
    month_samples: int | None = None
    synthetic_month_samples: int = 4096
    panel: Path | None = None
    wealth: float = 500000.0
    max_discarded: float = DEFAULT_MAX_DISCARDED
    kl_floor: float | None = None
    normalization: str = "joint"
    workers: int = 1

    def __post_init__(self):
        if not self.assets:
            raise DomainError("configuration names no assets")
        if not self.horizons or min(self.horizons) < 1 or list(self.horizons) != sorted(set(self.horizons)):
            raise DomainError(f"horizons must be increasing positive months, got {self.horizons}")
        if self.delta < 1:
            raise DomainError(f"delta must be >= 1, got {self.delta}")
        if not self.vol_windows or any(t // self.delta < 2 for t in self.vol_windows):
            raise DomainError("each volatility window must span at least two resampled returns")
        if not 0.0 < self.reference_hurst < 1.0:
            raise DomainError(f"reference Hurst exponent must lie in (0, 1), got {self.reference_hurst}")
        if self.ensemble_size < 1:
            raise DomainError("ensemble_size must be positive")
        if self.month_samples is not None and self.month_samples < 1:
            raise DomainError("month_samples must be positive")
        if self.synthetic_month_samples < 1:
            raise DomainError("synthetic_month_samples must be positive")
        if not self.wealth > 0:
            raise DomainError("wealth must be positive")

    def as_dict(self) -> dict:
        return {
            "assets": dict(self.assets),
            "out_dir": str(self.out_dir),
            "windows": list(self.windows.windows),
            "vol_windows": list(self.vol_windows),
            "delta": self.delta,
            "horizons": list(self.horizons),
            "reference_hurst": self.reference_hurst,
            "ensemble_size": self.ensemble_size,
            "seed": self.seed,
            "month_samples": self.month_samples,
            "synthetic_month_samples": self.synthetic_month_samples,
            "panel": None if self.panel is None else str(self.panel),
            "wealth": self.wealth,
            "max_discarded": self.max_discarded,
            "kl_floor": self.kl_floor,
            "normalization": self.normalization,
        }


_SCALARS = {
    "out_dir": Path,
    "windows": WindowSet.parse,
    "vol_windows": _int_list,
    "delta": int,
    "horizons": _int_list,
    "reference_hurst": float,
    "ensemble_size": int,
    "seed": int,
    "month_samples": int,
    "synthetic_month_samples": int,
    "panel": Path,
    "wealth": float,
    "max_discarded": float,
    "kl_floor": float,
    "normalization": str,
    "workers": int,
}


def parse_config_text(text: str, base_dir: Path | None = None) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Returns raw strings."""
    raw: dict = {"assets": {}}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("asset."):
            raw["assets"][key[len("asset.") :]] = value
        elif key in _SCALARS:
            raw[key] = value
        else:
            raise DomainError(f"config line {lineno}: unknown key {key!r}")
    if base_dir is not None:
        raw["_base_dir"] = base_dir
    return raw


def build_config(raw: dict, overrides: dict | None = None) -> RunConfig:
    """Typed configuration from raw strings; ``overrides`` win over the file."""
    merged = {k: v for k, v in raw.items() if k != "_base_dir"}
    merged["assets"] = dict(raw.get("assets", {}))
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "assets":
            merged["assets"].update(v)
        else:
            merged[k] = v
    base = raw.get("_base_dir")
    kwargs = {}
    for key, value in merged.items():
        if key == "assets":
            continue
        conv = _SCALARS[key]
        try:
            kwargs[key] = value if not isinstance(value, str) else conv(value)
        except ValueError as exc:
            raise DomainError(f"config key {key}: cannot parse {value!r}") from exc
    assets = {}
    for label, src in merged["assets"].items():
        if not src.startswith(SYNTHETIC_PREFIX) and base is not None and not Path(src).is_absolute():
            src = str(Path(base) / src)
        assets[label] = src
    if base is not None and kwargs.get("panel") is not None and not Path(kwargs["panel"]).is_absolute():
        kwargs["panel"] = Path(base) / kwargs["panel"]
    return RunConfig(assets=assets, **kwargs)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc.strerror}") from exc
    return build_config(parse_config_text(text, base_dir=path.parent), overrides)


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", label)


def _parse_synthetic(src: str, default_seed: int):
    parts = src[len(SYNTHETIC_PREFIX) :].split(":")
    try:
        hurst = float(parts[0])
        seed = int(parts[1]) if len(parts) > 1 and parts[1] else default_seed
    except (ValueError, IndexError) as exc:
        raise DomainError(f"synthetic source must read 'fbm:<H>[:<seed>]', got {src!r}") from exc
    return hurst, seed


@dataclass
class _Outputs:
    root: Path
    written: list = field(default_factory=list)

    def path(self, *parts) -> Path:
        p = self.root.joinpath(*parts)
        self.written.append(p)
        return p

    def discard(self):
        for p in reversed(self.written):
            p.unlink(missing_ok=True)
        dirs = sorted({p.parent for p in self.written}, key=lambda d: len(d.parts), reverse=True)
        for d in dirs:
            while d != self.root.parent and d.exists() and not any(d.iterdir()):
                d.rmdir()
                d = d.parent


def _month_ids(series: RegularSeries, month_samples: int | None) -> np.ndarray:
    if month_samples is not None:
        return np.arange(len(series)) // month_samples
    stamps = series.timestamps().astype("int64").astype("datetime64[s]")
    months = stamps.astype("datetime64[M]").astype(np.int64)
    return months - months[0]


def _horizon_slice(series: RegularSeries, month_ids: np.ndarray, horizon: int, label: str) -> np.ndarray:
    available = int(month_ids[-1]) + 1
    if horizon > available:
        raise DomainError(f"asset {label!r} covers {available} month(s); horizon {horizon} requested")
    return series.values[month_ids < horizon]


class _Reference:
    """Pooled fBm reference distributions, cached by series length."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.cache = {}

    def get(self, length: int):
        if length not in self.cache:
            c = self.config
            spec = FbmSpec(c.reference_hurst, length, c.seed, c.ensemble_size)
            paths = generate_ensemble(spec, workers=c.workers)
            self.cache[length] = pooled_distribution(paths, c.windows, c.normalization)
        return self.cache[length]


def _analysis_series(config: RunConfig, label: str, src: str, index: int, vol_window: int):
    """The series that is clustered for one asset, and the sample count of one month."""
    if src.startswith(SYNTHETIC_PREFIX):
        hurst, seed = _parse_synthetic(src, config.seed + 10_000 * (index + 1))
        months = config.month_samples or config.synthetic_month_samples
        length = months * max(config.horizons)
        return generate_fbm(FbmSpec(hurst, length, seed)), months, {"hurst": hurst, "seed": seed}
    ticks = load_ticks(src, asset_id=label)
    prices = resample(ticks, config.delta)
    vol = realized_volatility(log_returns(prices), vol_window // config.delta)
    return vol, config.month_samples, {"ticks": len(ticks)}


def run_pipeline(config: RunConfig) -> Path:
    """Run every stage and return the manifest path.

    On failure the files written so far are removed and a
    :class:`PipelineError` naming the stage is raised.
    """
    out = _Outputs(Path(config.out_dir))
    try:
        manifest = _run(config, out)
    except PipelineError:
        out.discard()
        raise
    except KLClusterError as exc:
        out.discard()
        raise PipelineError("pipeline", exc) from exc
    return manifest


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except KLClusterError as exc:
        raise PipelineError(name, exc) from exc
    except OSError as exc:
        raise PipelineError(name, DomainError(str(exc))) from exc


def _run(config: RunConfig, out: _Outputs) -> Path:
    labels = list(config.assets)
    panel = _stage("panel", io.read_panel, config.panel) if config.panel is not None else None
    if panel is not None and sorted(panel.assets) != sorted(labels):
        raise PipelineError("panel", DomainError(f"panel assets {panel.assets} differ from configured {labels}"))
    reference = _Reference(config)
    seeds = {"reference": [config.seed + i for i in range(config.ensemble_size)]}
    asset_meta = {}

    for vol_window in config.vol_windows:
        tdir = f"T{vol_window}"

        def analyse(item):
            index, label = item
            series, month_samples, meta = _stage(
                "volatility", _analysis_series, config, label, config.assets[label], index, vol_window
            )
            month_ids = _month_ids(series, month_samples)
            per_h = {}
            for h in config.horizons:
                values = _stage("horizon", _horizon_slice, series, month_ids, h, label)
                _stage("clusters", config.windows.check_length, values.size)
                P = _stage("clusters", pooled_distribution, [values], config.windows, config.normalization)
                Q = _stage("reference", reference.get, values.size)
                kl = _stage("entropy", kl_cluster_entropy, P, Q, config.max_discarded)
                sh = _stage("entropy", shannon_cluster_entropy, P)
                per_h[h] = (P, kl, sh)
            return label, meta, per_h

        items = list(enumerate(labels))
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(analyse, items))
        else:
            results = [analyse(it) for it in items]

        kl_by_month, sh_by_month = [], []
        for h in config.horizons:
            hdir = f"M{h:02d}"
            kl_ix, sh_ix = [], []
            for label, meta, per_h in results:
                asset_meta[label] = meta
                P, kl, sh = per_h[h]
                name = _safe(label)
                io.write_distribution(out.path(tdir, hdir, f"{name}_distribution.csv"), P)
                io.write_profile(out.path(tdir, hdir, f"{name}_kl_profile.csv"), kl)
                io.write_profile(out.path(tdir, hdir, f"{name}_shannon_profile.csv"), sh)
                kl_ix.append(_stage("index", kl_index, kl, None, label, h, vol_window))
                sh_ix.append(_stage("index", shannon_index, sh, None, label, h, vol_window))
            io.write_indices(out.path(tdir, hdir, "kl_indices.csv"), kl_ix)
            io.write_indices(out.path(tdir, hdir, "shannon_indices.csv"), sh_ix)
            if len(labels) >= 2:
                wk = _stage("weights", kl_weights, kl_ix, config.kl_floor)
                ws = _stage("weights", shannon_weights, sh_ix)
                io.write_weights(out.path(tdir, hdir, "kl_weights.csv"), wk)
                io.write_weights(out.path(tdir, hdir, "shannon_weights.csv"), ws)
                kl_by_month.append(wk)
                sh_by_month.append(ws)

        if kl_by_month:
            io.write_weights_by_month(out.path(tdir, "kl_weights_by_month.csv"), kl_by_month)
            io.write_weights_by_month(out.path(tdir, "shannon_weights_by_month.csv"), sh_by_month)

        if panel is not None and kl_by_month:
            if len(kl_by_month) != panel.months:
                raise PipelineError(
                    "portfolio",
                    DomainError(f"{len(kl_by_month)} horizons cannot drive a {panel.months}-month panel"),
                )
            schemes = {
                "kl": kl_by_month,
                "shannon": sh_by_month,
                "uniform": [uniform_weights(labels)] * panel.months,
            }
            for scheme, wbm in schemes.items():
                for strategy in ("lazy", "active"):
                    if strategy == "lazy":
                        traj = _stage("portfolio", simulate_lazy, wbm[0], panel, config.wealth)
                    else:
                        traj = _stage("portfolio", simulate_active, wbm, panel, config.wealth)
                    io.write_trajectory(out.path(tdir, "portfolio", f"{scheme}_{strategy}_trajectory.csv"), traj)
                    io.write_profit(out.path(tdir, "portfolio", f"{scheme}_{strategy}_profit.csv"), profit_report(traj))

    seeds["assets"] = asset_meta
    return _write_manifest(config, out, seeds)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(config: RunConfig, out: _Outputs, seeds: dict) -> Path:
    files = {p.relative_to(out.root).as_posix(): _digest(p) for p in out.written}
    manifest = {"config": config.as_dict(), "seeds": seeds, "outputs": dict(sorted(files.items()))}
    path = out.path("manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %d outputs and %s", len(files), path)
    return path


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
