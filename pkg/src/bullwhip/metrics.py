"""Empirical BWE from simulated traces, RMSE, and the report record."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import SimulationTrace
from .network import LayerAssignment


class MetricError(ValueError):
    pass


def _ratio(out: np.ndarray, inp: np.ndarray) -> float:
    # population variance over the window, matching the trend-variance convention
    v_in = float(np.var(inp))
    if v_in <= 0:
        raise MetricError("incoming orders have zero variance; BWE is undefined")
    return math.sqrt(float(np.var(out)) / v_in)


def node_bwe_empirical(trace: SimulationTrace, node: str) -> float:
    k = trace.net.index(node)
    if not trace.net.adjacency[k].any():
        raise MetricError(f"{node!r} is a source node and places no orders")
    return _ratio(trace.window(trace.ordered[k]), trace.window(trace.received[k]))


def layer_series(trace: SimulationTrace, assignment: LayerAssignment, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate (outgoing, incoming) orders of layer ``l`` over the analysis window."""
    if not assignment.unique:
        raise MetricError("layer positions are not unique; use node-to-node BWE instead")
    if l not in assignment.layers:
        raise MetricError(f"no layer {l}")
    idx = [trace.net.index(v) for v in assignment.layers[l]]
    if not trace.net.adjacency[idx].any(axis=1).all():
        raise MetricError(f"layer {l} contains source nodes, which place no orders")
    out = trace.ordered[idx].sum(axis=0)
    inp = trace.received[idx].sum(axis=0)
    return trace.window(out), trace.window(inp)


def layer_bwe_empirical(trace: SimulationTrace, assignment: LayerAssignment, l: int) -> float:
    return _ratio(*layer_series(trace, assignment, l))


def transient_layers(trace_or_net, assignment: LayerAssignment) -> list[int]:
    """Layers whose nodes all place orders (every layer below the sources)."""
    net = getattr(trace_or_net, "net", trace_or_net)
    out = []
    for l, members in sorted(assignment.layers.items()):
        if all(net.adjacency[net.index(v)].any() for v in members):
            out.append(l)
    return out


def layer_bwe_curve_empirical(trace: SimulationTrace, assignment: LayerAssignment) -> np.ndarray:
    return np.array([layer_bwe_empirical(trace, assignment, l) for l in transient_layers(trace, assignment)])


def rmse(analytical: Sequence[float], empirical: Sequence[float]) -> float:
    a = np.asarray(analytical, dtype=float)
    e = np.asarray(empirical, dtype=float)
    if a.shape != e.shape or a.ndim != 1 or a.size == 0:
        raise MetricError(f"need two equal-length non-empty vectors, got {a.shape} and {e.shape}")
    return float(np.sqrt(np.mean((a - e) ** 2)))


@dataclass
class BweReport:
    layers: list[int]
    analytical: list[float]
    empirical_mean: list[float]
    empirical_sd: list[float]
    replications: int
    rmse: float
    node_bwe: dict[str, float] = field(default_factory=dict)
    node_to_node: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.replications < 1:
            raise MetricError("a report needs at least one replication")
        if self.rmse < 0:
            raise MetricError("rmse is negative")
        self.layers = [int(l) for l in self.layers]
        for name in ("analytical", "empirical_mean", "empirical_sd"):
            setattr(self, name, [float(x) for x in getattr(self, name)])

    @classmethod
    def from_replications(cls, layers, analytical, empirical: np.ndarray, **extra) -> "BweReport":
        """``empirical`` has one row per replication and one column per layer."""
        emp = np.atleast_2d(np.asarray(empirical, dtype=float))
        mean = emp.mean(axis=0)
        return cls(list(layers), list(analytical), list(mean), list(emp.std(axis=0)), emp.shape[0],
                   rmse(analytical, mean), **extra)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "BweReport":
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "BweReport":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    def layer_rows(self) -> list[dict]:
        return [
            {"layer": l, "analytical": a, "empirical_mean": m, "empirical_sd": s, "replications": self.replications}
            for l, a, m, s in zip(self.layers, self.analytical, self.empirical_mean, self.empirical_sd)
        ]
