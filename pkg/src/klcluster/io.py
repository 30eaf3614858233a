"""CSV readers and writers for every file the package emits or consumes.

Machine-readable floats are printed with 17 significant digits so that a
file read back reproduces the written values bit for bit; weight files use
10 significant digits.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from klcluster.clusters import DurationDistribution
from klcluster.entropy import EntropyProfile
from klcluster.errors import DomainError, ParseError
from klcluster.portfolio import PortfolioTrajectory, PricePanel, ProfitReport
from klcluster.series import RegularSeries
from klcluster.weights import SUM_ATOL, DiversityIndex, WeightVector


def f17(x: float) -> str:
    return f"{x:.17g}"


def f10(x: float) -> str:
    return f"{x:.10g}"


def _write(path, header: Sequence[str], rows: Iterable[Sequence[str]], trailer: Sequence[str] | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        if trailer is not None:
            w.writerow(trailer)
    return path


def _rows(path, header: Sequence[str] | None = None, prefix: bool = False):
    """Yield (line number, fields) after checking the header."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open: {exc.strerror}", path) from exc
    with fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None:
            raise DomainError(f"{path}: file is empty")
        got = [h.strip() for h in got]
        if header is not None:
            ok = got[: len(header)] == list(header) if prefix else got == list(header)
            if not ok:
                raise ParseError(f"expected header {','.join(header)!r}, got {','.join(got)!r}", path, 1)
        yield 1, got
        for lineno, row in enumerate(reader, start=2):
            if row:
                yield lineno, row


def _num(text, path, line, kind=float):
    try:
        v = kind(text)
    except ValueError as exc:
        raise ParseError(f"cannot parse {text!r} as {kind.__name__}", path, line) from exc
    if kind is float and not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", path, line)
    return v


# -- series -----------------------------------------------------------------


def write_series(path, series: RegularSeries, index_column: str = "index"):
    """``index,value`` rows, or ``timestamp,value`` when ``index_column="timestamp"``."""
    if index_column == "index":
        keys = (str(i) for i in range(len(series)))
    elif index_column == "timestamp":
        keys = (f17(t) if not float(t).is_integer() else str(int(t)) for t in series.timestamps())
    else:
        raise DomainError(f"unknown index column {index_column!r}")
    return _write(path, [index_column, "value"], ((k, f17(v)) for k, v in zip(keys, series.values)))


def read_series(path) -> RegularSeries:
    rows = _rows(path)
    _, header = next(rows)
    if header not in (["index", "value"], ["timestamp", "value"]):
        raise ParseError(f"expected header 'index,value' or 'timestamp,value', got {','.join(header)!r}", path, 1)
    keys, values = [], []
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path, line)
        keys.append(_num(row[0], path, line))
        values.append(_num(row[1], path, line))
    if not values:
        raise DomainError(f"{path}: series file has no data rows")
    if header[0] == "index":
        return RegularSeries(np.array(values))
    step = keys[1] - keys[0] if len(keys) > 1 else 1.0
    if not step > 0:
        raise ParseError("timestamps must increase", path, 3)
    return RegularSeries(np.array(values), step_seconds=step, origin_timestamp=int(keys[0]))


# -- duration distributions and entropy profiles ----------------------------

DIST_HEADER = ["n", "tau", "count", "probability"]


def write_distribution(path, dist: DurationDistribution):
    rows = ((str(n), str(t), str(c), f17(dist.entries[(n, t)])) for (n, t), c in dist.counts.items())
    return _write(path, DIST_HEADER, rows)


def read_distribution(path, normalization: str | None = None) -> DurationDistribution:
    """Counts are authoritative; the probability column fixes the normalization mode when not given."""
    counts, probs = {}, {}
    rows = _rows(path, DIST_HEADER)
    next(rows)
    for line, row in rows:
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", path, line)
        n, t, c = (_num(x, path, line, int) for x in row[:3])
        if (n, t) in counts:
            raise ParseError(f"duplicate cell n={n}, tau={t}", path, line)
        if c < 0 or t < 1:
            raise ParseError("counts must be nonnegative and durations positive", path, line)
        counts[(n, t)] = c
        probs[(n, t)] = _num(row[3], path, line)
    if not counts:
        raise DomainError(f"{path}: distribution file has no data rows")
    if normalization is None:
        total = math.fsum(probs.values())
        normalization = "joint" if abs(total - 1.0) < 1e-9 else "per-window"
    dist = DurationDistribution(counts, normalization)
    for k, p in probs.items():
        if abs(dist.entries[k] - p) > 1e-12:
            raise ParseError(f"probability {p} of cell {k} disagrees with its count", path)
    return dist


PROFILE_HEADER = ["n", "tau", "component"]


def write_profile(path, profile: EntropyProfile):
    rows = ((str(n), str(t), f17(v)) for (n, t), v in profile.components.items())
    return _write(path, PROFILE_HEADER, rows, trailer=["aggregate", f17(profile.aggregate)])


def read_profile(path, kind: str) -> EntropyProfile:
    comps = {}
    aggregate = None
    rows = _rows(path, PROFILE_HEADER)
    next(rows)
    for line, row in rows:
        if row[0] == "aggregate":
            if len(row) != 2:
                raise ParseError("aggregate line needs exactly one value", path, line)
            aggregate = _num(row[1], path, line)
            continue
        if aggregate is not None:
            raise ParseError("data after the aggregate line", path, line)
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", path, line)
        comps[(_num(row[0], path, line, int), _num(row[1], path, line, int))] = _num(row[2], path, line)
    if aggregate is None:
        raise ParseError("missing trailing aggregate line", path)
    return EntropyProfile(kind, comps, aggregate=aggregate)


# -- indices and weights ----------------------------------------------------


def write_indices(path, indices: Sequence[DiversityIndex]):
    return _write(path, ["asset", "value"], ((ix.asset_id, f17(ix.value)) for ix in indices))


def read_indices(path, kind: str) -> list[DiversityIndex]:
    out = []
    rows = _rows(path, ["asset", "value"])
    next(rows)
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path, line)
        v = _num(row[1], path, line)
        if v < 0:
            raise ParseError(f"index must be nonnegative, got {v}", path, line)
        out.append(DiversityIndex(kind, v, asset_id=row[0]))
    if not out:
        raise DomainError(f"{path}: index file has no data rows")
    return out


def write_weights(path, weights: WeightVector):
    return _write(path, ["asset", "weight"], ((a, f10(w)) for a, w in weights.weights.items()))


def read_weights(path, scheme: str = "published", atol: float | None = None) -> WeightVector:
    w = {}
    rows = _rows(path, ["asset", "weight"])
    next(rows)
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path, line)
        w[row[0]] = _num(row[1], path, line)
    if atol is None:
        # 10 printed digits leave up to ~5e-11 rounding per entry
        atol = max(SUM_ATOL, 1e-10 * len(w))
    return WeightVector(w, scheme, atol)


def _wide(path, prefix):
    rows = _rows(path, ["asset"], prefix=True)
    _, header = next(rows)
    cols = header[1:]
    expected = [f"{prefix}{i}" for i in range(1, len(cols) + 1)]
    if not cols or cols != expected:
        raise ParseError(f"expected columns asset,{prefix}1..{prefix}{len(cols)}", path, 1)
    assets, values = [], []
    for line, row in rows:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
        assets.append(row[0])
        values.append([_num(x, path, line) for x in row[1:]])
    if not assets:
        raise DomainError(f"{path}: no asset rows")
    return assets, np.array(values)


def read_panel(path) -> PricePanel:
    assets, prices = _wide(path, "m")
    try:
        return PricePanel(tuple(assets), prices)
    except DomainError as exc:
        raise ParseError(str(exc), path) from exc


def write_panel(path, panel: PricePanel):
    header = ["asset"] + [f"m{i}" for i in range(1, panel.months + 1)]
    return _write(path, header, ([a, *map(f17, row)] for a, row in zip(panel.assets, panel.prices)))


def read_weights_by_month(path, scheme: str = "published", atol: float = 1e-3) -> list[WeightVector]:
    """One weight vector per ``M<k>`` column.

    The default ``atol`` admits 4-decimal printed tables whose rows miss a
    unit sum by rounding.
    """
    assets, w = _wide(path, "M")
    out = []
    for j in range(w.shape[1]):
        try:
            out.append(WeightVector.from_array(assets, w[:, j], scheme, atol))
        except DomainError as exc:
            raise ParseError(f"column M{j + 1}: {exc}", path) from exc
    return out


def write_weights_by_month(path, weights: Sequence[WeightVector]):
    assets = weights[0].assets
    header = ["asset"] + [f"M{i}" for i in range(1, len(weights) + 1)]
    return _write(path, header, ([a, *(f10(w[a]) for w in weights)] for a in assets))


# -- trajectories -----------------------------------------------------------


def write_trajectory(path, traj: PortfolioTrajectory):
    header = ["month", *traj.assets, "total"]
    rows = (
        [str(m + 1), *(f17(v) for v in traj.wealth[:, m]), f17(traj.totals[m])] for m in range(traj.wealth.shape[1])
    )
    return _write(path, header, rows)


def read_trajectory(path, strategy: str, scheme: str, initial_wealth: float) -> PortfolioTrajectory:
    rows = _rows(path)
    _, header = next(rows)
    if header[:1] != ["month"] or header[-1:] != ["total"] or len(header) < 3:
        raise ParseError("expected header month,<assets...>,total", path, 1)
    cols = []
    for line, row in rows:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
        vals = [_num(x, path, line) for x in row[1:]]
        if abs(math.fsum(vals[:-1]) - vals[-1]) > 0.01:
            raise ParseError("total disagrees with the per-asset wealth", path, line)
        cols.append(vals[:-1])
    return PortfolioTrajectory(strategy, scheme, tuple(header[1:-1]), np.array(cols).T, initial_wealth)


def write_profit(path, report: ProfitReport):
    rows = ((str(m + 1), f17(v)) for m, v in enumerate(report.monthly))
    return _write(path, ["month", "profit"], rows, trailer=["year", f17(report.year)])


def read_profit(path) -> ProfitReport:
    monthly, year = [], None
    rows = _rows(path, ["month", "profit"])
    next(rows)
    for line, row in rows:
        if row[0] == "year":
            year = _num(row[1], path, line)
        else:
            monthly.append(_num(row[1], path, line))
    if year is None:
        raise ParseError("missing trailing year line", path)
    return ProfitReport(np.array(monthly), year)
