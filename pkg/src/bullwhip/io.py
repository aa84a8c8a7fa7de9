"""CSV/JSON persistence for traces and reports, plus optional SVG charts."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dynamics import SimulationTrace
from .experiments import ValidationReport, _plain


def write_rows(rows: Sequence[Mapping], path: str | Path) -> Path:
    path = Path(path)
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        if not rows:
            return path
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return path


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def trace_rows(trace: SimulationTrace, replication: int = 0) -> Iterable[dict]:
    """Long format: one row per (t, link) order and per (t, node) inventory."""
    net = trace.net
    orders = trace.orders
    for t in range(trace.horizon):
        for (i, j), y in orders.items():
            yield {"replication": replication, "t": t, "kind": "order", "from": i, "to": j, "value": float(y[t])}
        for k, v in enumerate(net.nodes):
            yield {"replication": replication, "t": t, "kind": "inventory", "from": v, "to": "",
                   "value": float(trace.inventory[k, t])}


def save_trace_csv(traces: Sequence[SimulationTrace], path: str | Path) -> Path:
    rows = (row for r, tr in enumerate(traces) for row in trace_rows(tr, r))
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["replication", "t", "kind", "from", "to", "value"])
        w.writeheader()
        for row in rows:
            row["value"] = repr(row["value"])
            w.writerow(row)
    return path


def save_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(obj), indent=2))
    return path


def save_report(rep: ValidationReport, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write the report as JSON, or as check and data CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        return [save_json(rep.to_dict(), out / f"{rep.name}.json")]
    checks = [{"check": c.name, "passed": c.passed, "tolerance": c.tolerance,
               "measured": json.dumps(_plain(c.measured))} for c in rep.checks]
    paths = [write_rows(checks, out / f"{rep.name}_checks.csv")]
    for name, rows in report_tables(rep).items():
        paths.append(write_rows(rows, out / f"{rep.name}_{name}.csv"))
    return paths


def report_tables(rep: ValidationReport) -> dict[str, list[dict]]:
    """Tidy tables behind a report, keyed by table name."""
    d = rep.data
    tables: dict[str, list[dict]] = {}
    if "cells" in d:
        tables["rmse"] = [{"pattern": c["pattern"], "structure": c["structure"], "rmse": c["rmse"],
                           "rmse_deterministic": c.get("rmse_deterministic", "")} for c in d["cells"]]
        rows = []
        for c in d["cells"]:
            r = c["report"]
            for l, a, m, s in zip(r["layers"], r["analytical"], r["empirical_mean"], r["empirical_sd"]):
                rows.append({"pattern": c["pattern"], "structure": c["structure"], "layer": l, "analytical": a,
                             "empirical_mean": m, "empirical_sd": s, "replications": r["replications"]})
        tables["curves"] = rows
    if "curve" in d:
        tables["layer_bwe"] = [{"layer": l, "Phi": v} for l, v in zip(d["layers"], _plain(d["curve"]))]
    if "omega" in d:
        tables["amplification"] = [{"omega": w, "phi": v} for w, v in zip(_plain(d["omega"]), _plain(d["phi"]))]
    if "surface" in d:
        rows = []
        for i, L in enumerate(d["L_values"]):
            for j, l in enumerate(d["layers"]):
                rows.append({"L": L, "layer": l, "Phi": float(np.asarray(d["surface"])[i, j])})
        tables["surface"] = rows
    if "curves" in d and "cells" not in d:
        rows = []
        for name, c in d["curves"].items():
            for l, v in enumerate(_plain(c), start=1):
                rows.append({"structure": name, "layer": l, "Phi": v})
        tables["curves"] = rows
    width_rows = []
    for label, panel in d.items():
        if isinstance(panel, Mapping):
            for kind, res in ([("eta_mc", panel)] if "widths" in panel else list(panel.items())):
                if isinstance(res, Mapping) and "widths" in res:
                    for m, mean, se in zip(res["widths"], _plain(res["mean"]), _plain(res["se"])):
                        width_rows.append({"panel": label, "source": kind, "width": m, "mean_phi1_sq": mean, "se": se})
    if width_rows:
        tables["width"] = width_rows
    return tables


def save_svg(rep: ValidationReport, out_dir: str | Path) -> list[Path]:
    """Line charts for the report's tables; needs matplotlib (optional extra)."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise RuntimeError("SVG output needs matplotlib: pip install 'artifact[plot]'") from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, rows in report_tables(rep).items():
        if not rows:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        keys = list(rows[0])
        x_key = next(k for k in ("layer", "width", "omega", "L") if k in keys) if any(
            k in keys for k in ("layer", "width", "omega", "L")) else None
        if x_key is None:
            plt.close(fig)
            continue
        y_keys = [k for k in ("analytical", "empirical_mean", "Phi", "phi", "mean_phi1_sq") if k in keys]
        group_keys = [k for k in ("pattern", "structure", "panel", "source", "layer", "L") if k in keys and k != x_key]
        groups: dict = {}
        for r in rows:
            groups.setdefault(tuple(r[k] for k in group_keys), []).append(r)
        for g, rs in groups.items():
            xs = [float(r[x_key]) for r in rs]
            for y in y_keys:
                ax.plot(xs, [float(r[y]) for r in rs], marker="o" if len(xs) < 40 else None, ms=3,
                        label=" ".join(map(str, g + (y,))))
        ax.set_xlabel(x_key)
        if len(groups) * len(y_keys) <= 12:
            ax.legend(fontsize=6)
        ax.set_title(f"{rep.name} {name}")
        fig.tight_layout()
        p = out / f"{rep.name}_{name}.svg"
        fig.savefig(p)
        plt.close(fig)
        paths.append(p)
    return paths
