"""Order-up-to inventory dynamics on supply networks.

Each period every node (1) sets its order-up-to level to ``L`` times the
moving average of its last ``P`` received demands, (2) orders the gap between
that level and its inventory position, split over its suppliers by link
weight, then (3) receives this period's orders from downstream and updates its
inventory position. Histories before t = 0 are zero and ``x(0) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import signal

from .network import SupplyNetwork


class SimulationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """One run. Arrays are node-major: ``ordered[i, t]`` is node i's total order at t.

    Source nodes compute an order too, but it leaves the network; ``placed``
    masks it out so it only counts orders that travel along links.
    """

    net: SupplyNetwork
    inventory: np.ndarray
    ordered: np.ndarray
    received: np.ndarray
    market_inputs: dict[str, np.ndarray]
    horizon: int
    warmup: int = 0

    def __post_init__(self):
        if not 0 <= self.warmup < self.horizon:
            raise SimulationError(f"warmup={self.warmup} must lie in [0, T={self.horizon})")
        for a in (self.inventory, self.ordered, self.received):
            a.setflags(write=False)

    @property
    def placed(self) -> np.ndarray:
        return self.ordered * self.net.adjacency.any(axis=1)[:, None]

    def order(self, i: str, j: str) -> np.ndarray:
        a, b = self.net.index(i), self.net.index(j)
        if not self.net.adjacency[a, b]:
            raise SimulationError(f"no link {i!r}->{j!r}")
        return self.net.weights[a, b] * self.ordered[a]

    @property
    def orders(self) -> dict[tuple[str, str], np.ndarray]:
        return {(i, j): self.order(i, j) for i, j in self.net.links}

    def window(self, series: np.ndarray) -> np.ndarray:
        return series[..., self.warmup:]


def propagate(net: SupplyNetwork, external: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the dynamics for a batch of external-demand matrices.

    ``external`` has shape (B, T, n): demand entering each node from outside
    the network. Returns ``(inventory, ordered, received)`` with the same
    shape, where ``ordered[b, t, i]`` is node i's total order before the
    split over its links.
    """
    B, T, n = external.shape
    L = net.lead_time.astype(float)
    P = net.window
    W = net.weights
    pmax = int(P.max())
    groups = [(int(p), np.nonzero(P == p)[0]) for p in np.unique(P)]
    # received demand, with pmax zero periods of pre-history in front
    D = np.zeros((B, T + pmax, n))
    O = np.zeros((B, T, n))
    X = np.zeros((B, T, n))
    x = np.zeros((B, n))
    S = np.zeros((B, n))
    dense = n <= 256
    Wt = W if dense else None
    if not dense:
        from scipy import sparse

        Wt = sparse.csr_matrix(W)
    for t in range(T):
        k = t + pmax
        for p, idx in groups:
            S[:, idx] = D[:, k - p:k, idx].sum(axis=1) / p
        X[:, t] = x
        o = L * S - x
        O[:, t] = o
        d = (o @ Wt if dense else (Wt.T @ o.T).T) + external[:, t]
        D[:, k] = d
        x = x + o - d
    return X, O, D[:, pmax:]


def _check_demands(net: SupplyNetwork, demands: Mapping[str, Sequence[float]], T: int) -> dict[str, np.ndarray]:
    market = {}
    for m in net.market_nodes:
        if m not in demands:
            raise SimulationError(f"no demand sequence for market node {m!r}")
        seq = np.asarray(demands[m], dtype=float)
        if seq.ndim != 1 or seq.size < T:
            raise SimulationError(f"demand for {m!r} has {seq.size} periods, need at least T={T}")
        market[m] = seq[:T]
    extra = set(demands) - set(net.market_nodes)
    if extra:
        raise SimulationError(f"demand given for non-market node(s) {sorted(extra)}")
    return market


def simulate(net: SupplyNetwork, demands: Mapping[str, Sequence[float]], T: int | None = None,
             warmup: int = 0) -> SimulationTrace:
    """Simulate ``T`` periods; ``demands`` maps each market node to its demand sequence."""
    return simulate_many(net, [demands], T, warmup)[0]


def simulate_many(net: SupplyNetwork, demand_sets: Sequence[Mapping[str, Sequence[float]]],
                  T: int | None = None, warmup: int = 0) -> list[SimulationTrace]:
    """Independent runs of the same network, advanced together in one batch."""
    net.validate()
    if not demand_sets:
        return []
    if T is None:
        T = min(len(next(iter(d.values()))) for d in demand_sets)
    if T < 1:
        raise SimulationError("T must be positive")
    if not 0 <= warmup < T:
        raise SimulationError(f"warmup={warmup} must lie in [0, T={T})")
    markets = [_check_demands(net, d, T) for d in demand_sets]
    ext = np.zeros((len(markets), T, len(net)))
    for b, market in enumerate(markets):
        for m, seq in market.items():
            ext[b, :, net.index(m)] += seq
    X, O, D = propagate(net, ext)
    return [
        SimulationTrace(net, X[b].T.copy(), O[b].T.copy(), D[b].T.copy(), markets[b], T, warmup)
        for b in range(len(markets))
    ]


def serial_filter(L: float, P: int) -> np.ndarray:
    """FIR taps of one order-up-to stage: y(t) = (1 + L/P) d(t-1) - (L/P) d(t-P-1)."""
    b = np.zeros(P + 2)
    b[1] += 1.0 + L / P
    b[P + 1] -= L / P
    return b


def simulate_serial(L: float, P: int, seq: Sequence[float]) -> np.ndarray:
    """Orders placed by one stage fed with ``seq``; zero pre-history."""
    if P < 1:
        raise SimulationError("P must be at least 1")
    return signal.lfilter(serial_filter(L, P), [1.0], np.asarray(seq, dtype=float))
