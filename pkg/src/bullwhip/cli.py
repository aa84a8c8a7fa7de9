"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a validator check fails,
2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .demand import DemandError
from .dynamics import SimulationError, simulate_many
from .experiments import (
    REPRODUCTIONS,
    VALIDATORS,
    ConfigError,
    ExperimentConfig,
    ValidationReport,
    analytical_curve,
    layered_report,
    market_demands,
    preset,
)
from .markov import amplification_spectrum, node_to_node_table, save_amplification_csv, save_summary_csv
from .metrics import transient_layers
from .network import NetworkError, assign_layers, generate_structure, save_network
from .spectral import dft_amplitudes, save_spectrum_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parse_overrides(text: str | None) -> dict:
    """``--tolerance-overrides`` takes JSON or comma-separated key=value pairs."""
    if not text:
        return {}
    try:
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise UsageError("tolerance overrides must be a JSON object")
        return {k: float(v) for k, v in doc.items()}
    except json.JSONDecodeError:
        pass
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"bad tolerance override {part!r}; use key=value")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"tolerance {k.strip()!r} is not a number") from None
    return out


def build_config(args, name: str | None = None) -> ExperimentConfig:
    """Preset for ``name`` (or the defaults), then the config file, then flags."""
    base = preset(name) if name else ExperimentConfig()
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        base = ExperimentConfig.from_dict({**base.to_dict(), **doc})
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.reps is not None:
        changes["replications"] = args.reps
    tol = _parse_overrides(args.tolerance_overrides)
    if tol:
        changes["tolerances"] = tol
    return base.with_overrides(**changes) if changes else base


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    out = Path(args.out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(rep: ValidationReport, args, cfg: ExperimentConfig) -> int:
    out = _out_dir(args, cfg)
    paths = io.save_report(rep, out, args.format)
    if getattr(args, "svg", False):
        paths += io.save_svg(rep, out)
    for line in rep.summary_lines():
        print(line)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    p = cfg.policy
    net = generate_structure(cfg.structure, p.L, p.P)
    demands = market_demands(cfg.demand, net.market_nodes, cfg.horizon, cfg.seed, 0, cfg.replications)
    traces = simulate_many(net, demands, cfg.horizon, cfg.warmup)
    out = _out_dir(args, cfg)
    report = layered_report(cfg.structure, cfg.demand, p, cfg.horizon, cfg.warmup, cfg.replications, cfg.seed)
    if args.format == "json":
        io.save_json({"report": report.to_dict(), "config": cfg.to_dict()}, out / "simulate.json")
    else:
        io.save_trace_csv(traces, out / "trace.csv")
        io.write_rows(report.layer_rows(), out / "layer_bwe.csv")
    print(f"simulated {cfg.replications} run(s) of {len(net)} nodes over {cfg.horizon} periods; rmse={report.rmse:.3g}")
    print(f"wrote results to {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = build_config(args)
    p = cfg.policy
    net = generate_structure(cfg.structure, p.L, p.P)
    asg = assign_layers(net)
    depth = len(transient_layers(net, asg))
    demands = market_demands(cfg.demand, net.market_nodes, cfg.horizon, cfg.seed, 0, 1)[0]
    window = np.arange(cfg.warmup + 1, cfg.horizon + 1, dtype=float)
    agg = sum(demands.values())[cfg.warmup:]
    curve = analytical_curve(agg, cfg.demand.trend, len(net.market_nodes), p, depth, window)
    profiles = {m: dft_amplitudes(d[cfg.warmup:] - cfg.demand.trend * window) for m, d in demands.items()}
    n2n = node_to_node_table(net, profiles)
    out = _out_dir(args, cfg)
    layers = [{"layer": l, "analytical": float(v)} for l, v in enumerate(curve, start=1)]
    if args.format == "json":
        io.save_json({"layers": layers, "node_to_node": n2n, "config": cfg.to_dict()}, out / "analyze.json")
    else:
        io.write_rows(layers, out / "layer_bwe_analytical.csv")
        save_summary_csv(n2n, out / "node_to_node.csv")
    for r in layers:
        print(f"layer {r['layer']}: Phi = {r['analytical']:.6f}")
    print(f"wrote results to {out}")
    return EXIT_OK


def cmd_export(args) -> int:
    cfg = build_config(args)
    p = cfg.policy
    net = generate_structure(cfg.structure, p.L, p.P)
    out = _out_dir(args, cfg)
    what = args.what
    if what == "network":
        save_network(net, out / "network.json")
    elif what == "spectrum":
        seq = market_demands(cfg.demand, net.market_nodes[:1], cfg.horizon, cfg.seed, 0, 1)[0]
        seq = next(iter(seq.values()))[cfg.warmup:]
        save_spectrum_csv(dft_amplitudes(seq), out / "spectrum.csv")
    elif what == "amplification":
        N = cfg.horizon - cfg.warmup
        omegas = 2 * np.pi * np.arange(1, N // 2) / N
        save_amplification_csv(amplification_spectrum(net, omegas), out / "amplification.csv")
    elif what == "config":
        cfg.save(out / "config.json")
    print(f"wrote {what} to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = build_config(args, args.name)
    return _emit(VALIDATORS[args.name](cfg), args, cfg)


def cmd_reproduce(args) -> int:
    cfg = build_config(args, args.name)
    return _emit(REPRODUCTIONS[args.name](cfg), args, cfg)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--reps", type=int, help="replications")
    common.add_argument("--out-dir", help="output directory (default: config 'output')")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--tolerance-overrides", help="JSON object or key=value,... of tolerance values")

    parser = argparse.ArgumentParser(prog="bullwhip", description="Bullwhip effect in supply networks")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate a configured network").set_defaults(func=cmd_simulate)
    sub.add_parser("analyze", parents=[common], help="analytical layer and node-to-node BWE").set_defaults(
        func=cmd_analyze)
    v = sub.add_parser("validate", parents=[common], help="check a proposition numerically")
    v.add_argument("name", choices=sorted(VALIDATORS))
    v.add_argument("--svg", action="store_true", help="also write SVG charts (needs matplotlib)")
    v.set_defaults(func=cmd_validate)
    r = sub.add_parser("reproduce", parents=[common], help="reproduce a table or figure")
    r.add_argument("name", choices=sorted(REPRODUCTIONS))
    r.add_argument("--svg", action="store_true", help="also write SVG charts (needs matplotlib)")
    r.set_defaults(func=cmd_reproduce)
    e = sub.add_parser("export", parents=[common], help="export network, spectrum, or amplification data")
    e.add_argument("what", choices=["network", "spectrum", "amplification", "config"])
    e.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, NetworkError, DemandError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
