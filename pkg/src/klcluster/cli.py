"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from klcluster import io
from klcluster.clusters import WindowSet, pooled_distribution
from klcluster.entropy import DEFAULT_MAX_DISCARDED, kl_cluster_entropy, shannon_cluster_entropy
from klcluster.errors import DomainError, KLClusterError
from klcluster.fbm import FbmSpec, generate_ensemble, generate_fbm
from klcluster.market import load_ticks, log_returns, realized_volatility, resample
from klcluster.portfolio import profit_report, simulate_active, simulate_lazy
from klcluster.weights import kl_index, kl_weights, shannon_index, shannon_weights, uniform_weights

log = logging.getLogger("klcluster")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_KL_FLOOR = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="random seed (default 0)")
    parser.add_argument("--out-dir", type=Path, default=default, help="directory for relative output paths")
    parser.add_argument("--config", type=Path, default=default, help="key = value run configuration")
    parser.add_argument("-v", "--verbose", action="store_true", default=default if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="klcluster", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("fbm", parents=[common], help="generate a fractional Brownian motion path")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--method", choices=("auto", "davies-harte", "hosking"), default="auto")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("volatility", parents=[common], help="realized volatility from a tick CSV")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--delta", type=int, default=1, help="resampling step in seconds")
    p.add_argument("--window", type=int, default=180, help="volatility window T in seconds")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("clusters", parents=[common], help="cluster duration distribution of a series")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--windows", default=",".join(map(str, WindowSet().windows)))
    p.add_argument("--normalization", choices=("joint", "per-window"), default="joint")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("entropy", parents=[common], help="KL or Shannon cluster entropy profile")
    p.add_argument("--kind", choices=("kl", "shannon"), required=True)
    p.add_argument("--p", type=Path, required=True, help="duration distribution of the series")
    p.add_argument("--q", type=Path, help="reference distribution (kl); generated from fBm when omitted")
    p.add_argument("--reference-hurst", type=float, default=0.5)
    p.add_argument("--reference-length", type=int, help="fBm path length for a generated reference")
    p.add_argument("--ensemble-size", type=int, default=10)
    p.add_argument("--windows", help="window set of a generated reference (default: those of --p)")
    p.add_argument("--max-discarded", type=float, default=DEFAULT_MAX_DISCARDED)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("index", parents=[common], help="diversity indices from entropy profiles")
    p.add_argument("--kind", choices=("kl", "shannon"), required=True)
    p.add_argument("--profile", action="append", required=True, metavar="ASSET=PATH")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("weights", parents=[common], help="portfolio weights from diversity indices")
    p.add_argument("--scheme", choices=("kl", "shannon", "uniform"), required=True)
    p.add_argument("--indices", type=Path, required=True)
    p.add_argument(
        "--epsilon-floor",
        type=float,
        nargs="?",
        const=DEFAULT_KL_FLOOR,
        default=None,
        help=f"raise zero KL indices to this floor (default when given without a value: {DEFAULT_KL_FLOOR:g})",
    )
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("portfolio", parents=[common], help="simulate a lazy or active investor")
    p.add_argument("--panel", type=Path, required=True)
    p.add_argument("--weights", type=Path, required=True, help="asset,weight or asset,M1..M12 CSV")
    p.add_argument("--strategy", choices=("lazy", "active"), required=True)
    p.add_argument("--wealth", type=float, default=500000.0)
    p.add_argument("--profit-out", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", parents=[common], help="full pipeline from a configuration file")
    p.add_argument("--windows")
    p.add_argument("--vol-windows")
    p.add_argument("--delta")
    p.add_argument("--horizons")
    p.add_argument("--reference-hurst")
    p.add_argument("--ensemble-size")
    p.add_argument("--panel")
    p.add_argument("--wealth")
    p.add_argument("--max-discarded")
    p.add_argument("--kl-floor")
    p.add_argument("--workers")
    p.add_argument("--asset", action="append", default=[], metavar="LABEL=SOURCE")

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _out(args, path: Path) -> Path:
    if args.out_dir is not None and not path.is_absolute():
        return args.out_dir / path
    return path


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _pairs(items, flag):
    out = {}
    for item in items:
        label, sep, value = item.partition("=")
        if not sep or not label or not value:
            raise UsageError(f"{flag} expects LABEL=VALUE, got {item!r}")
        out[label] = value
    return out


def cmd_fbm(args):
    series = generate_fbm(FbmSpec(args.hurst, args.length, _seed(args)), method=args.method)
    io.write_series(_out(args, args.out), series)


def cmd_volatility(args):
    ticks = load_ticks(args.input)
    vol = realized_volatility(log_returns(resample(ticks, args.delta)), args.window // args.delta)
    io.write_series(_out(args, args.out), vol, index_column="timestamp")


def cmd_clusters(args):
    series = io.read_series(args.input)
    windows = WindowSet.parse(args.windows)
    windows.check_length(len(series))
    io.write_distribution(_out(args, args.out), pooled_distribution([series], windows, args.normalization))


def cmd_entropy(args):
    P = io.read_distribution(args.p)
    if args.kind == "shannon":
        profile = shannon_cluster_entropy(P)
    else:
        if args.q is not None:
            Q = io.read_distribution(args.q, normalization=P.normalization)
        else:
            if args.reference_length is None:
                raise UsageError("kl without --q needs --reference-length to generate the fBm reference")
            windows = WindowSet.parse(args.windows) if args.windows else WindowSet(P.windows)
            windows.check_length(args.reference_length)
            spec = FbmSpec(args.reference_hurst, args.reference_length, _seed(args), args.ensemble_size)
            Q = pooled_distribution(generate_ensemble(spec), windows, P.normalization)
        profile = kl_cluster_entropy(P, Q, args.max_discarded)
        if profile.discarded_mass > 0:
            log.warning("discarded P mass outside supp(Q): %.6g", profile.discarded_mass)
    io.write_profile(_out(args, args.out), profile)


def cmd_index(args):
    make = kl_index if args.kind == "kl" else shannon_index
    indices = [make(io.read_profile(path, args.kind), asset_id=label) for label, path in _pairs(args.profile, "--profile").items()]
    io.write_indices(_out(args, args.out), indices)


def cmd_weights(args):
    if args.scheme == "uniform":
        w = uniform_weights([ix.asset_id for ix in io.read_indices(args.indices, "shannon")])
    elif args.scheme == "kl":
        w = kl_weights(io.read_indices(args.indices, "kl"), floor=args.epsilon_floor)
    else:
        w = shannon_weights(io.read_indices(args.indices, "shannon"))
    io.write_weights(_out(args, args.out), w)


def _read_weight_file(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[1:2] == ["weight"]:
        return [io.read_weights(path, atol=1e-3)]
    return io.read_weights_by_month(path)


def cmd_portfolio(args):
    panel = io.read_panel(args.panel)
    weights = _read_weight_file(args.weights)
    if args.strategy == "lazy":
        traj = simulate_lazy(weights[0], panel, args.wealth)
    else:
        if len(weights) == 1:
            weights = weights * panel.months
        traj = simulate_active(weights, panel, args.wealth)
    io.write_trajectory(_out(args, args.out), traj)
    if args.profit_out is not None:
        io.write_profit(_out(args, args.profit_out), profit_report(traj))


def cmd_run(args):
    from klcluster.pipeline import build_config, load_config, parse_config_text, run_pipeline

    overrides = {
        k: getattr(args, k)
        for k in (
            "windows",
            "vol_windows",
            "delta",
            "horizons",
            "reference_hurst",
            "ensemble_size",
            "panel",
            "wealth",
            "max_discarded",
            "kl_floor",
            "workers",
        )
    }
    overrides["seed"] = args.seed
    overrides["out_dir"] = args.out_dir
    overrides["assets"] = _pairs(args.asset, "--asset")
    if args.config is not None:
        config = load_config(args.config, overrides)
    else:
        config = build_config(parse_config_text(""), overrides)
    manifest = run_pipeline(config)
    print(manifest)


def cmd_serve(args):
    import uvicorn

    from klcluster.service.app import app

    uvicorn.run(app, host=args.host, port=args.port)


COMMANDS = {
    "fbm": cmd_fbm,
    "volatility": cmd_volatility,
    "clusters": cmd_clusters,
    "entropy": cmd_entropy,
    "index": cmd_index,
    "weights": cmd_weights,
    "portfolio": cmd_portfolio,
    "run": cmd_run,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"klcluster {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KLClusterError as exc:
        print(f"klcluster {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"klcluster {args.command}: {DomainError.__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
