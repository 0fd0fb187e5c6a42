"""Command-line entry points: run, plot, hist, serve.

Exit codes are stable: 0 success, 1 usage or config error, 2 I/O error,
3 network error.  Every flag can also come from a TOML file via --config;
explicit flags win over the file, the file wins over built-in defaults.
The ALVIZ_LOG environment variable (error/warn/info/debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import socket
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import changes, dataset, embedding, engine, plots, tree

log = logging.getLogger("alviz")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NETWORK = 3

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the contract here is 1."""

    def error(self, message):
        raise CliError(EXIT_CONFIG, f"{message}\n{self.format_usage()}".rstrip())


def parse_fraction(text: str) -> float:
    """A test fraction, as a decimal ('0.25') or exact ratio ('9730/45730')."""
    text = str(text).strip()
    try:
        value = float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise CliError(EXIT_CONFIG, f"bad fraction {text!r}") from None
    if not 0.0 < value < 1.0:
        raise CliError(EXIT_CONFIG, f"test fraction must be in (0, 1), got {text}")
    return value


def _parse_floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = str(text).split(",")
    if len(parts) != n:
        raise CliError(EXIT_CONFIG, f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise CliError(EXIT_CONFIG, f"{what} must be numeric, got {text!r}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="alviz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    run = sub.add_parser("run", help="run an experiment and write an artifact")
    run.add_argument("--config", help="TOML file mirroring these flags")
    run.add_argument("--data", help="CSV file (header row required)")
    run.add_argument("--target", help="label column name in --data")
    run.add_argument("--synthetic", help="generator kind instead of --data")
    run.add_argument("--n", type=int, help="synthetic sample count")
    run.add_argument("--d", type=int, help="synthetic feature count")
    run.add_argument("--noise", type=float, help="synthetic label noise sd")
    run.add_argument("--synthetic-seed", type=int, help="synthetic generator seed")
    run.add_argument("--test-frac", help="held-out fraction, decimal or a/b")
    run.add_argument("--batch-size", type=int)
    run.add_argument("--batches", type=int)
    run.add_argument("--strategies", help="comma list from al,uc,rn")
    run.add_argument("--seed", type=int)
    run.add_argument("--split-seed", type=int, help="default: same as --seed")
    run.add_argument("--lifetime", type=float)
    run.add_argument("--max-depth", type=int)
    run.add_argument("--no-standardize", action="store_const", const=True,
                     dest="no_standardize", help="skip feature standardization")
    run.add_argument("--no-standardize-embedding", action="store_const", const=True,
                     dest="no_standardize_embedding")
    run.add_argument("--out", help="artifact path to write")

    plot = sub.add_parser("plot", help="render heatmaps, MSE curve and scatter")
    plot.add_argument("--config")
    plot.add_argument("--run", help="artifact path")
    plot.add_argument("--out-dir")
    plot.add_argument("--anchor", help="pc1,pc2 click point")
    plot.add_argument("--k", type=int, help="nearest-point count for --anchor")
    plot.add_argument("--rect", help="lo1,hi1,lo2,hi2 selection rectangle")
    plot.add_argument("--cap", type=int, help="max points kept from --rect")

    hist = sub.add_parser("hist", help="histogram queried labels per strategy")
    hist.add_argument("--config")
    hist.add_argument("--run")
    hist.add_argument("--out-dir")
    hist.add_argument("--prefix", type=int, help="first N queries (default: all)")
    hist.add_argument("--bins", type=int)
    hist.add_argument("--data", help="dataset CSV for the comparison histogram")
    hist.add_argument("--target")

    srv = sub.add_parser("serve", help="serve artifacts over HTTP/JSON")
    srv.add_argument("--config")
    srv.add_argument("--run", action="append", help="artifact path (repeatable)")
    srv.add_argument("--host")
    srv.add_argument("--port", type=int)
    srv.add_argument("--cors-origin", action="append",
                     help="allowed origin (repeatable; default any)")
    srv.add_argument("--panel-dir", help="built panel to serve at /")
    return parser


_DEFAULTS = {
    "run": {
        "data": None, "target": None, "synthetic": None, "n": 2000, "d": 4,
        "noise": 0.5, "synthetic_seed": 0, "test_frac": "0.25", "batch_size": 50,
        "batches": 10, "strategies": "al,uc,rn", "seed": 0, "split_seed": None,
        "lifetime": tree.DEFAULT_LIFETIME, "max_depth": tree.DEFAULT_MAX_DEPTH,
        "no_standardize": False, "no_standardize_embedding": False, "out": None,
    },
    "plot": {
        "run": None, "out_dir": None, "anchor": None, "k": 20, "rect": None, "cap": 20,
    },
    "hist": {
        "run": None, "out_dir": None, "prefix": None, "bins": 40,
        "data": None, "target": None,
    },
    "serve": {
        "run": None, "host": "127.0.0.1", "port": 8080, "cors_origin": None,
        "panel_dir": None,
    },
}


def _load_toml(path: str, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise CliError(EXIT_CONFIG, f"bad TOML in {path}: {exc}") from None
    scope = raw.get(command, raw)
    if not isinstance(scope, dict):
        raise CliError(EXIT_CONFIG, f"config section {command!r} must be a table")
    flat = {
        key.replace("-", "_"): value
        for key, value in scope.items()
        if not isinstance(value, dict)
    }
    known = set(_DEFAULTS[command])
    unknown = sorted(set(flat) - known)
    if unknown:
        raise CliError(EXIT_CONFIG, f"unknown config keys for {command}: {unknown}")
    return flat


def _effective(args: argparse.Namespace, command: str) -> dict:
    """Merge flag values over TOML over defaults; None flags mean 'not given'."""
    opts = dict(_DEFAULTS[command])
    if getattr(args, "config", None):
        opts.update(_load_toml(args.config, command))
    for key in _DEFAULTS[command]:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _load_dataset(opts) -> dataset.Dataset:
    if opts["data"] and opts["synthetic"]:
        raise CliError(EXIT_CONFIG, "give either --data or --synthetic, not both")
    if opts["data"]:
        if not opts["target"]:
            raise CliError(EXIT_CONFIG, "--data requires --target")
        try:
            return dataset.load_csv(opts["data"], opts["target"])
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {opts['data']}: {exc}") from None
        except dataset.DatasetError as exc:
            raise CliError(EXIT_IO, str(exc)) from None
    if opts["synthetic"]:
        try:
            return dataset.make_synthetic(
                opts["synthetic"], n=int(opts["n"]), d=int(opts["d"]),
                noise_sd=float(opts["noise"]), seed=int(opts["synthetic_seed"]),
            )
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from None
    raise CliError(EXIT_CONFIG, "one of --data or --synthetic is required")


def cmd_run(opts) -> int:
    if not opts["out"]:
        raise CliError(EXIT_CONFIG, "--out is required")
    ds = _load_dataset(opts)
    seed = int(opts["seed"])
    split_seed = seed if opts["split_seed"] is None else int(opts["split_seed"])
    strategies = tuple(
        s.strip()
        for s in (opts["strategies"] if isinstance(opts["strategies"], str)
                  else ",".join(opts["strategies"])).split(",")
        if s.strip()
    )
    config = engine.ExperimentConfig(
        strategies=strategies,
        batch_size=int(opts["batch_size"]),
        num_batches=int(opts["batches"]),
        seed=seed,
        lifetime=float(opts["lifetime"]),
        max_depth=int(opts["max_depth"]),
        standardize_features=not opts["no_standardize"],
        standardize_embedding=not opts["no_standardize_embedding"],
        split=dataset.SplitSpec(parse_fraction(opts["test_frac"]), split_seed),
    )
    try:
        config.validate(ds.n)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    artifact = engine.run_experiment(config, ds)
    try:
        artifact.save(opts["out"])
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {opts['out']}: {exc}") from None
    for si, name in enumerate(artifact.strategies):
        print(f"{name}: final mse {artifact.mse[si, -1]:.6g}")
    print(f"artifact: {opts['out']}")
    return EXIT_OK


def _load_artifact(path) -> engine.RunArtifact:
    if not path:
        raise CliError(EXIT_CONFIG, "--run is required")
    try:
        return engine.RunArtifact.load(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None
    except engine.ArtifactError as exc:
        raise CliError(EXIT_IO, str(exc)) from None


def _resolve_selection(opts, artifact) -> embedding.Selection:
    if (opts["anchor"] is None) == (opts["rect"] is None):
        raise CliError(EXIT_CONFIG, "give exactly one of --anchor or --rect")
    try:
        if opts["anchor"] is not None:
            pc1, pc2 = _parse_floats(opts["anchor"], 2, "--anchor")
            return embedding.nearest_k(artifact.pc_coords, (pc1, pc2), int(opts["k"]))
        rect = _parse_floats(opts["rect"], 4, "--rect")
        return embedding.select_rect(artifact.pc_coords, rect, int(opts["cap"]))
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def cmd_plot(opts) -> int:
    artifact = _load_artifact(opts["run"])
    if not opts["out_dir"]:
        raise CliError(EXIT_CONFIG, "--out-dir is required")
    out_dir = Path(opts["out_dir"])
    selection = _resolve_selection(opts, artifact)
    if selection.indices.size == 0:
        print("warning: empty selection, heatmaps will have no rows", file=sys.stderr)
    matrices = [
        changes.compute_matrix(artifact, name, kind, selection.indices)
        for name in artifact.strategies
        for kind in changes.KINDS
    ]
    vmax = max((float(np.max(np.abs(m.values))) for m in matrices if m.values.size),
               default=0.0)
    written = []
    for m in matrices:
        path = out_dir / f"change_{m.strategy}_{m.kind}.svg"
        _write_text(path, plots.heatmap_svg(m, vmax=vmax))
        written.append(path)
    mse_path = out_dir / "mse.svg"
    _write_text(mse_path, plots.mse_svg(artifact.strategies, artifact.mse))
    written.append(mse_path)
    scatter_path = out_dir / "scatter.svg"
    _write_text(
        scatter_path,
        plots.scatter_svg(artifact.pc_coords, artifact.test_labels, selection.indices),
    )
    written.append(scatter_path)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_hist(opts) -> int:
    artifact = _load_artifact(opts["run"])
    if not opts["out_dir"]:
        raise CliError(EXIT_CONFIG, "--out-dir is required")
    out_dir = Path(opts["out_dir"])
    comparison = None
    if opts["data"]:
        if not opts["target"]:
            raise CliError(EXIT_CONFIG, "--data requires --target")
        try:
            comparison = dataset.load_csv(opts["data"], opts["target"]).labels
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read {opts['data']}: {exc}") from None
        except dataset.DatasetError as exc:
            raise CliError(EXIT_IO, str(exc)) from None
    try:
        edges, per_strategy, comp = plots.histogram_data(
            artifact, opts["prefix"], int(opts["bins"]), comparison_labels=comparison
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    series = [
        (name, per_strategy[name], plots.STRATEGY_COLORS.get(name, plots.FALLBACK_COLOR))
        for name in artifact.strategies
    ]
    series.append(("all_data", comp, "#999999"))
    svg_path = out_dir / "hist.svg"
    _write_text(svg_path, plots.histogram_svg(edges, series))
    csv_path = out_dir / "hist.csv"
    rows = ["bin_lo,bin_hi," + ",".join(name for name, _, _ in series)]
    for b in range(len(edges) - 1):
        cells = [format(edges[b], ".17g"), format(edges[b + 1], ".17g")]
        cells += [str(int(counts[b])) for _, counts, _ in series]
        rows.append(",".join(cells))
    _write_text(csv_path, "\n".join(rows) + "\n")
    print(f"wrote {svg_path}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_serve(opts) -> int:
    import uvicorn

    from . import serve

    if not opts["run"]:
        raise CliError(EXIT_CONFIG, "at least one --run artifact is required")
    paths = opts["run"] if isinstance(opts["run"], list) else [opts["run"]]
    try:
        artifacts = serve.load_artifacts(paths)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read artifact: {exc}") from None
    except engine.ArtifactError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    origins = opts["cors_origin"] or ["*"]
    app = serve.create_app(artifacts, cors_origins=origins, static_dir=opts["panel_dir"])

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.bind((opts["host"], int(opts["port"])))
    except OSError as exc:
        sock.close()
        raise CliError(
            EXIT_NETWORK, f"cannot bind {opts['host']}:{opts['port']}: {exc}"
        ) from None
    host, port = sock.getsockname()[:2]
    print(f"serving {len(artifacts)} run(s) on http://{host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass
    finally:
        sock.close()
    return EXIT_OK


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("ALVIZ_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    handlers = {"run": cmd_run, "plot": cmd_plot, "hist": cmd_hist, "serve": cmd_serve}
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliError(EXIT_CONFIG, parser.format_usage().rstrip())
        opts = _effective(args, args.command)
        return handlers[args.command](opts)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
