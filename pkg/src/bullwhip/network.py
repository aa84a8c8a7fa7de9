"""Supply-network topologies: construction, layering, and the absorbing-chain split.

Orders flow along links: ``adjacency[i, j]`` is true when node ``i`` places
orders with node ``j`` (``j`` is upstream of ``i``). Market nodes receive the
external demand; source nodes have no upstream suppliers and absorb orders.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

WEIGHT_TOL = 1e-12


class NetworkError(ValueError):
    """Raised when a network violates one of its structural invariants."""


class StructureKind(str, enum.Enum):
    PARAL = "Paral"
    CONV = "Conv"
    DIV = "Div"
    DIV2CONV = "Div2Conv"
    SERIAL = "Serial"
    CUSTOM = "Custom"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SupplyNetwork:
    nodes: tuple[str, ...]
    adjacency: np.ndarray
    weights: np.ndarray
    lead_time: np.ndarray
    window: np.ndarray
    market_nodes: tuple[str, ...]
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.nodes)
        object.__setattr__(self, "nodes", tuple(str(v) for v in self.nodes))
        object.__setattr__(self, "market_nodes", tuple(str(v) for v in self.market_nodes))
        object.__setattr__(self, "adjacency", _frozen(np.asarray(self.adjacency, dtype=bool)))
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=float)))
        lead = np.broadcast_to(np.asarray(self.lead_time), (n,))
        win = np.broadcast_to(np.asarray(self.window), (n,))
        object.__setattr__(self, "lead_time", _frozen(lead.astype(int)))
        object.__setattr__(self, "window", _frozen(win.astype(int)))
        object.__setattr__(self, "_index", {v: k for k, v in enumerate(self.nodes)})
        self.validate()

    def __len__(self) -> int:
        return len(self.nodes)

    def index(self, node: str) -> int:
        try:
            return self._index[str(node)]
        except KeyError:
            raise NetworkError(f"unknown node {node!r}") from None

    @property
    def links(self) -> list[tuple[str, str]]:
        rows, cols = np.nonzero(self.adjacency)
        return [(self.nodes[i], self.nodes[j]) for i, j in zip(rows, cols)]

    @property
    def source_nodes(self) -> tuple[str, ...]:
        out = self.adjacency.any(axis=1)
        return tuple(v for v, has_out in zip(self.nodes, out) if not has_out)

    @property
    def market_index(self) -> np.ndarray:
        return np.array([self.index(v) for v in self.market_nodes], dtype=int)

    def validate(self) -> None:
        """Check every invariant; raise :class:`NetworkError` on the first violation."""
        n = len(self.nodes)
        if n == 0:
            raise NetworkError("network has no nodes")
        if len(set(self.nodes)) != n:
            raise NetworkError("node identifiers are not unique")
        A, W = self.adjacency, self.weights
        if A.shape != (n, n) or W.shape != (n, n):
            raise NetworkError(f"adjacency/weights must be {n}x{n}")
        diag = np.nonzero(np.diag(A))[0]
        if diag.size:
            raise NetworkError(f"self-link at node {self.nodes[diag[0]]!r}")
        off = np.nonzero(~A & (W != 0))
        if off[0].size:
            i, j = off[0][0], off[1][0]
            raise NetworkError(f"weight on missing link {self.nodes[i]!r}->{self.nodes[j]!r}")
        if np.any(W[A] <= 0) or not np.all(np.isfinite(W)):
            raise NetworkError("link weights must be positive and finite")
        has_out = A.any(axis=1)
        sums = W.sum(axis=1)
        bad = np.nonzero(has_out & (np.abs(sums - 1.0) > WEIGHT_TOL))[0]
        if bad.size:
            raise NetworkError(f"weights of node {self.nodes[bad[0]]!r} sum to {sums[bad[0]]!r}, not 1")
        bad = np.nonzero(self.lead_time < 1)[0]
        if bad.size:
            raise NetworkError(f"lead time of node {self.nodes[bad[0]]!r} is below 1")
        bad = np.nonzero(self.window < 1)[0]
        if bad.size:
            raise NetworkError(f"window of node {self.nodes[bad[0]]!r} is below 1")
        if not self.market_nodes:
            raise NetworkError("network has no market nodes")
        for m in self.market_nodes:
            if m not in self._index:
                raise NetworkError(f"market node {m!r} does not exist")
        market = np.zeros(n, dtype=bool)
        market[[self._index[m] for m in self.market_nodes]] = True
        has_in = A.any(axis=0)
        for k in range(n):
            if market[k]:
                continue
            if not has_in[k]:
                raise NetworkError(f"node {self.nodes[k]!r} receives no orders and is not a market node")

    def with_policy(self, lead_time, window) -> "SupplyNetwork":
        return SupplyNetwork(self.nodes, self.adjacency, self.weights, lead_time, window, self.market_nodes)


@dataclass(frozen=True)
class LayerAssignment:
    layer_of: dict[str, int]
    layers: dict[int, tuple[str, ...]]
    unique: bool

    @property
    def depth(self) -> int:
        return max(self.layers)


@dataclass(frozen=True)
class StructureSpec:
    """Layered structure recipe. ``layer_widths`` run downstream (market) to upstream."""

    kind: StructureKind
    layer_widths: tuple[int, ...]
    rho: float = 0.25
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", StructureKind(self.kind))
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        self.validate()

    def validate(self) -> None:
        w = self.layer_widths
        if len(w) < 2:
            raise NetworkError("a structure needs at least 2 layers")
        if any(x < 1 for x in w):
            raise NetworkError("layer widths must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise NetworkError(f"rho={self.rho} outside [0, 1]")
        kind = self.kind
        diffs = np.diff(w)
        if kind is StructureKind.SERIAL and any(x != 1 for x in w):
            raise NetworkError("Serial structures have width 1 in every layer")
        if kind is StructureKind.PARAL and np.any(diffs != 0):
            raise NetworkError("Paral structures have constant width")
        # Div widens towards the market, so widths shrink along the downstream->upstream list.
        if kind is StructureKind.DIV and np.any(diffs >= 0):
            raise NetworkError("Div widths must increase downstream")
        if kind is StructureKind.CONV and np.any(diffs <= 0):
            raise NetworkError("Conv widths must decrease downstream")
        if kind is StructureKind.DIV2CONV:
            peak = int(np.argmax(w))
            if not (0 < peak < len(w) - 1 and np.all(diffs[:peak] > 0) and np.all(diffs[peak:] < 0)):
                raise NetworkError("Div2Conv widths must rise to a single interior peak and fall again")
        if kind is StructureKind.CUSTOM:
            raise NetworkError("Custom networks are built from explicit links, not generated")


def _equal_split(adjacency: np.ndarray) -> np.ndarray:
    A = adjacency.astype(float)
    deg = A.sum(axis=1, keepdims=True)
    return np.divide(A, deg, out=np.zeros_like(A), where=deg > 0)


def generate_structure(spec: StructureSpec, L: int, P: int) -> SupplyNetwork:
    """Random network following ``spec`` with homogeneous lead time ``L`` and window ``P``."""
    return layered_network(spec.layer_widths, spec.rho, spec.seed, L, P)


def layered_network(widths: Sequence[int], rho: float, seed: int, L: int = 1, P: int = 1) -> SupplyNetwork:
    """Random unique-layer network with any layer widths (downstream first).

    Each upstream node gets one guaranteed link from the layer below it (drawn
    among still-uncovered downstream nodes while any remain); every other pair
    in consecutive layers is linked with probability ``rho``; downstream nodes
    left without a supplier get one uniformly chosen upstream parent.
    """
    rng = np.random.default_rng(seed)
    widths = [int(w) for w in widths]
    if len(widths) < 1 or min(widths) < 1:
        raise NetworkError("layer widths must be positive")
    names = [f"n{l + 1}_{k}" for l, w in enumerate(widths) for k in range(w)]
    offsets = np.concatenate([[0], np.cumsum(widths)])
    A = np.zeros((len(names), len(names)), dtype=bool)
    for l in range(len(widths) - 1):
        down = np.arange(offsets[l], offsets[l + 1])
        up = np.arange(offsets[l + 1], offsets[l + 2])
        covered = np.zeros(down.size, dtype=bool)
        first = {}
        for u in rng.permutation(up):
            pool = np.nonzero(~covered)[0] if not covered.all() else np.arange(down.size)
            k = int(rng.choice(pool))
            covered[k] = True
            first[u] = k
        for u in up:
            for k in range(down.size):
                if k == first[u]:
                    A[down[k], u] = True
                elif rng.random() < rho:
                    A[down[k], u] = True
        for k in range(down.size):
            if not A[down[k], up].any():
                A[down[k], rng.choice(up)] = True
    market = tuple(names[: widths[0]])
    return SupplyNetwork(tuple(names), A, _equal_split(A), L, P, market)


def custom_network(
    nodes: Sequence[str],
    links: Sequence[tuple[str, str]] | Sequence[tuple[str, str, float]],
    market_nodes: Sequence[str],
    lead_time=1,
    window=1,
) -> SupplyNetwork:
    """Hand-built network; links without a weight get an equal split of the node's orders."""
    nodes = [str(v) for v in nodes]
    idx = {v: k for k, v in enumerate(nodes)}
    n = len(nodes)
    A = np.zeros((n, n), dtype=bool)
    W = np.zeros((n, n))
    explicit = False
    for link in links:
        a, b = str(link[0]), str(link[1])
        if a not in idx or b not in idx:
            raise NetworkError(f"link {a!r}->{b!r} references an unknown node")
        A[idx[a], idx[b]] = True
        if len(link) > 2:
            W[idx[a], idx[b]] = float(link[2])
            explicit = True
    if not explicit:
        W = _equal_split(A)
    return SupplyNetwork(tuple(nodes), A, W, _per_node(lead_time, nodes), _per_node(window, nodes), tuple(market_nodes))


def _per_node(value, nodes: Sequence[str]) -> np.ndarray:
    if isinstance(value, Mapping):
        missing = [v for v in nodes if v not in value]
        if missing:
            raise NetworkError(f"no value given for node {missing[0]!r}")
        return np.array([int(value[v]) for v in nodes])
    return np.full(len(nodes), int(value))


def serial_network(depth: int, L: int = 1, P: int = 1) -> SupplyNetwork:
    """Chain n1 -> n2 -> ... -> n{depth}; n1 faces the market, n{depth} is the source."""
    spec = StructureSpec(StructureKind.SERIAL, (1,) * depth, rho=0.0)
    return generate_structure(spec, L, P)


def assign_layers(net: SupplyNetwork) -> LayerAssignment:
    """Layer = 1 + shortest order path from a market node; flags non-consecutive links."""
    n = len(net)
    A = net.adjacency
    layer = np.zeros(n, dtype=int)
    queue = deque()
    for m in net.market_index:
        layer[m] = 1
        queue.append(m)
    while queue:
        i = queue.popleft()
        for j in np.nonzero(A[i])[0]:
            if layer[j] == 0:
                layer[j] = layer[i] + 1
                queue.append(j)
    if np.any(layer == 0):
        k = int(np.nonzero(layer == 0)[0][0])
        raise NetworkError(f"node {net.nodes[k]!r} is not reachable from the market")
    rows, cols = np.nonzero(A)
    unique = bool(np.all(layer[cols] == layer[rows] + 1))
    layer_of = {net.nodes[k]: int(layer[k]) for k in range(n)}
    layers: dict[int, tuple[str, ...]] = {}
    for l in sorted(set(layer_of.values())):
        layers[l] = tuple(v for v in net.nodes if layer_of[v] == l)
    return LayerAssignment(layer_of, layers, unique)


@dataclass(frozen=True, eq=False)
class MarkovPartition:
    absorbing: tuple[str, ...]
    transient: tuple[str, ...]
    R: np.ndarray
    W: np.ndarray

    @property
    def n_absorbing(self) -> int:
        return len(self.absorbing)

    @property
    def n_transient(self) -> int:
        return len(self.transient)


def _downstream_first_order(A: np.ndarray, members: np.ndarray) -> list[int]:
    """Kahn topological order of ``members`` along order flow, ties by index."""
    sub = A[np.ix_(members, members)]
    indeg = sub.sum(axis=0).astype(int)
    ready = sorted(k for k in range(members.size) if indeg[k] == 0)
    order = []
    while ready:
        k = ready.pop(0)
        order.append(k)
        for j in np.nonzero(sub[k])[0]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(int(j))
                ready.sort()
    if len(order) < members.size:
        # cyclic transient block: keep the remaining nodes in index order
        order += [k for k in range(members.size) if k not in set(order)]
    return [int(members[k]) for k in order]


def markov_partition(net: SupplyNetwork) -> MarkovPartition:
    sources = set(net.source_nodes)
    if not sources:
        raise NetworkError("network has no source node; orders never leave the network")
    absorbing = np.array([k for k, v in enumerate(net.nodes) if v in sources], dtype=int)
    transient = np.array([k for k, v in enumerate(net.nodes) if v not in sources], dtype=int)
    t_order = _downstream_first_order(net.adjacency, transient) if transient.size else []
    Wt = net.weights[np.ix_(t_order, t_order)] if t_order else np.zeros((0, 0))
    R = net.weights[np.ix_(t_order, absorbing)] if t_order else np.zeros((0, absorbing.size))
    part = MarkovPartition(
        tuple(net.nodes[k] for k in absorbing),
        tuple(net.nodes[k] for k in t_order),
        _frozen(R),
        _frozen(Wt),
    )
    rows = np.hstack([part.R, part.W]).sum(axis=1)
    if np.any(np.abs(rows - 1.0) > WEIGHT_TOL):
        raise NetworkError("transient rows of [R | W] do not sum to 1")
    return part


# --- JSON serialization -------------------------------------------------------------

def network_to_dict(net: SupplyNetwork) -> dict:
    rows, cols = np.nonzero(net.adjacency)
    return {
        "nodes": list(net.nodes),
        "links": [
            {"from": net.nodes[i], "to": net.nodes[j], "weight": float(net.weights[i, j])}
            for i, j in zip(rows, cols)
        ],
        "lead_time": {v: int(x) for v, x in zip(net.nodes, net.lead_time)},
        "window": {v: int(x) for v, x in zip(net.nodes, net.window)},
        "market_nodes": list(net.market_nodes),
    }


def network_from_dict(doc: Mapping) -> SupplyNetwork:
    try:
        nodes = [str(v) for v in doc["nodes"]]
        links = [(l["from"], l["to"], float(l["weight"])) if "weight" in l else (l["from"], l["to"]) for l in doc["links"]]
        market = doc["market_nodes"]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network document: missing {exc}") from None
    if links and any(len(l) == 2 for l in links) and any(len(l) == 3 for l in links):
        raise NetworkError("either every link carries a weight or none does")
    return custom_network(nodes, links, market, doc.get("lead_time", 1), doc.get("window", 1))


def save_network(net: SupplyNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2))


def load_network(path: str | Path) -> SupplyNetwork:
    return network_from_dict(json.loads(Path(path).read_text()))
