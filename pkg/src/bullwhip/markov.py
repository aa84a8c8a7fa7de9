"""Node-to-node BWE through the absorbing-chain view of a network.

Orders walk from transient nodes to the absorbing sources. Along the way each
transient node multiplies a component at frequency ``w`` by its own ``phi(w)``
(the node placing the order amplifies). Summing over all walks gives

    B(w) = (I - W * phi) ^ -1 (R * phi),

with ``phi`` applied row-wise. ``B[i, k]`` is the amplitude gain from demand
entering transient node ``i`` to the orders arriving at source ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .network import MarkovPartition, SupplyNetwork, markov_partition
from .spectral import PolicyParams, SpectralProfile, amplification_rate


class DivergenceError(ArithmeticError):
    """The walk sum does not converge: spectral radius of ``W * phi`` is >= 1."""


@dataclass(frozen=True, eq=False)
class AmplificationMatrix:
    B: np.ndarray  # (frequencies, transient, absorbing)
    omegas: np.ndarray
    transient: tuple[str, ...]
    absorbing: tuple[str, ...]

    def entry(self, source: str, sink: str) -> np.ndarray:
        try:
            i, k = self.transient.index(source), self.absorbing.index(sink)
        except ValueError:
            raise KeyError(f"{source!r} is not transient or {sink!r} is not absorbing") from None
        return self.B[:, i, k]


def _as_vector(part: MarkovPartition, phi) -> np.ndarray:
    if isinstance(phi, Mapping):
        return np.array([float(phi[v]) for v in part.transient])
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 0:
        return np.full(part.n_transient, float(phi))
    if phi.shape != (part.n_transient,):
        raise ValueError(f"need one phi per transient node ({part.n_transient}), got {phi.shape}")
    return phi


def amplification_matrix(part: MarkovPartition, phi, check: bool = True) -> np.ndarray:
    """``B`` at one frequency; ``phi`` is a scalar, a per-transient vector, or a node map."""
    phi = _as_vector(part, phi)
    M = part.W * phi[:, None]
    if check and M.size:
        radius = np.max(np.abs(np.linalg.eigvals(M)))
        if radius >= 1.0 - 1e-12:
            raise DivergenceError(f"spectral radius {radius:.6g} >= 1")
    rhs = part.R * phi[:, None]
    if not M.size:
        return rhs
    return np.linalg.solve(np.eye(part.n_transient) - M, rhs)


def amplification_matrix_homogeneous(part: MarkovPartition, phi: float) -> np.ndarray:
    """Same as :func:`amplification_matrix` for one common ``phi``, written as ``(I/phi - W)^-1 R``."""
    if phi <= 0:
        raise ValueError("phi must be positive")
    return np.linalg.solve(np.eye(part.n_transient) / phi - part.W, part.R)


def transient_phi(net: SupplyNetwork, part: MarkovPartition, omegas: np.ndarray) -> np.ndarray:
    """Amplification of every transient node on ``omegas``; shape (frequencies, transient)."""
    cols = []
    for v in part.transient:
        k = net.index(v)
        cols.append(amplification_rate(PolicyParams(int(net.lead_time[k]), int(net.window[k])), omegas))
    return np.column_stack(cols) if cols else np.zeros((np.size(omegas), 0))


def amplification_spectrum(net: SupplyNetwork, omegas: Sequence[float]) -> AmplificationMatrix:
    part = markov_partition(net)
    omegas = np.asarray(omegas, dtype=float)
    phis = transient_phi(net, part, omegas)
    # the DAG check is frequency independent; do it once
    nilpotent = not np.any(np.linalg.matrix_power(part.W != 0, max(part.n_transient, 1)))
    B = np.stack([amplification_matrix(part, phis[n], check=not nilpotent) for n in range(omegas.size)])
    return AmplificationMatrix(B, omegas, part.transient, part.absorbing)


def node_to_node_variance(amp: AmplificationMatrix, source: str, sink: str, profile: SpectralProfile) -> float:
    b = amp.entry(source, sink)
    if b.size != len(profile):
        raise ValueError("frequency grid of B does not match the profile")
    return 0.5 * float(np.sum((b * profile.amplitudes) ** 2))


def node_to_node_bwe(net: SupplyNetwork, source: str, sink: str, profile: SpectralProfile,
                     amp: AmplificationMatrix | None = None) -> float:
    """``sqrt(sum (B_ik A_n)^2 / sum A_n^2)`` for demand ``profile`` entering ``source``."""
    if source not in net.market_nodes:
        raise ValueError(f"{source!r} is not a market node")
    if sink not in net.source_nodes:
        raise ValueError(f"{sink!r} is not an absorbing node")
    if profile.is_flat:
        raise ValueError("input demand has zero variance")
    base = profile.variance
    if amp is None:
        amp = amplification_spectrum(net, profile.frequencies)
    return math.sqrt(node_to_node_variance(amp, source, sink, profile) / base)


def node_to_node_table(net: SupplyNetwork, profiles: Mapping[str, SpectralProfile]) -> list[dict]:
    """Every (market node, source) pair; ``profiles`` maps market node to its demand profile."""
    rows = []
    amp_cache: dict[int, AmplificationMatrix] = {}
    for m, prof in profiles.items():
        key = len(prof)
        if key not in amp_cache:
            amp_cache[key] = amplification_spectrum(net, prof.frequencies)
        for k in net.source_nodes:
            rows.append({"source": m, "sink": k, "Phi": node_to_node_bwe(net, m, k, prof, amp_cache[key])})
    return rows


def save_amplification_csv(amp: AmplificationMatrix, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("omega,source,sink,B_entry\n")
        for n, w in enumerate(amp.omegas):
            for i, src in enumerate(amp.transient):
                for k, snk in enumerate(amp.absorbing):
                    fh.write(f"{w!r},{src},{snk},{amp.B[n, i, k]!r}\n")


def save_summary_csv(rows: Sequence[Mapping], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("source,sink,Phi\n")
        for r in rows:
            fh.write(f"{r['source']},{r['sink']},{float(r['Phi'])!r}\n")
