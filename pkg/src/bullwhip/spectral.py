"""Frequency-domain view of the order-up-to policy.

A node with lead time ``L`` and window ``P`` is an LTI filter with gain
``F(e^{iw}) = (1 + (L/P)(1 - e^{-iPw})) / e^{iw}``. Its magnitude ``phi(w)``
scales the amplitude of every demand component at frequency ``w``, so a
layer's output variance follows from the input's DFT amplitudes alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class SpectralError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """DFT amplitudes ``A_n`` at ``w_n = 2 pi n / T`` for ``n = 1..T/2-1``.

    The mean (n = 0) is kept separately and the Nyquist bin is dropped, so
    ``variance`` is the part of the signal the analysis can amplify.
    """

    amplitudes: np.ndarray
    frequencies: np.ndarray
    mean_component: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        w = np.asarray(self.frequencies, dtype=float)
        if a.shape != w.shape or a.ndim != 1:
            raise SpectralError("amplitudes and frequencies must be 1-D and the same length")
        if np.any(a < 0):
            raise SpectralError("amplitudes must be non-negative")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "frequencies", w)

    def __len__(self) -> int:
        return self.amplitudes.size

    @property
    def horizon(self) -> int:
        return 2 * (self.amplitudes.size + 1)

    @property
    def variance(self) -> float:
        return 0.5 * float(np.sum(self.amplitudes ** 2))

    @property
    def is_flat(self) -> bool:
        """No variance beyond DFT round-off of the mean."""
        return self.variance <= 1e-20 * max(1.0, self.mean_component ** 2)

    def scaled(self, factor: float) -> "SpectralProfile":
        return SpectralProfile(self.amplitudes * abs(factor), self.frequencies, self.mean_component * factor)


@dataclass(frozen=True)
class PolicyParams:
    """Order-up-to parameters. ``L = 0`` is accepted as a degenerate pass-through."""

    L: int
    P: int

    def __post_init__(self):
        if self.L < 0 or self.P < 1:
            raise SpectralError(f"need L >= 0 and P >= 1, got L={self.L}, P={self.P}")


def fourier_grid(T: int) -> np.ndarray:
    return 2 * np.pi * np.arange(1, T // 2) / T


def dft_amplitudes(seq: Sequence[float]) -> SpectralProfile:
    x = np.asarray(seq, dtype=float)
    T = x.size
    if T < 4 or T % 2:
        raise SpectralError(f"sequence length must be even and at least 4, got {T}")
    X = np.fft.rfft(x)
    return SpectralProfile(2.0 * np.abs(X[1:T // 2]) / T, fourier_grid(T), float(X[0].real) / T)


def expected_profile(power: np.ndarray, T: int, mean: float = 0.0) -> SpectralProfile:
    """Profile from expected squared amplitudes ``E[A_n^2]`` (e.g. a noise spectrum)."""
    power = np.asarray(power, dtype=float)
    if power.size != T // 2 - 1:
        raise SpectralError(f"need {T // 2 - 1} power values for T={T}")
    return SpectralProfile(np.sqrt(power), fourier_grid(T), mean)


def white_noise_profile(sigma: float, T: int) -> SpectralProfile:
    """Expected spectrum of N(0, sigma^2) noise: ``E[A_n^2] = 4 sigma^2 / T``."""
    return expected_profile(np.full(T // 2 - 1, 4.0 * sigma * sigma / T), T)


def ar1_profile(phi: float, sigma: float, T: int) -> SpectralProfile:
    from .demand import ar1_spectrum_amplitudes

    return expected_profile(ar1_spectrum_amplitudes(phi, sigma, T), T)


def transfer_gain(p: PolicyParams, omega):
    w = np.asarray(omega, dtype=float)
    r = p.L / p.P
    g = (1.0 + r * (1.0 - np.exp(-1j * p.P * w))) * np.exp(-1j * w)
    return complex(g) if g.ndim == 0 else g


def amplification_rate(p: PolicyParams, omega):
    w = np.asarray(omega, dtype=float)
    r = p.L / p.P
    phi = np.sqrt(1.0 + 2.0 * (r + r * r) * (1.0 - np.cos(p.P * w)))
    return float(phi) if phi.ndim == 0 else phi


def layer_transfer_gain(params: Sequence[PolicyParams], omega):
    if not params:
        raise SpectralError("layer has no nodes")
    return sum(transfer_gain(p, omega) for p in params)


def _gain_powers(phi, l: int, n: int) -> np.ndarray:
    """``prod_{k<=l} phi_k^2`` per frequency; ``phi`` is one curve or one curve per layer."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 1:
        if phi.size != n:
            raise SpectralError(f"amplification curve has {phi.size} points, profile has {n}")
        return phi ** (2 * l)
    if phi.ndim != 2 or phi.shape[1] != n:
        raise SpectralError("per-layer amplification must have shape (layers, frequencies)")
    if l > phi.shape[0]:
        raise SpectralError(f"layer {l} exceeds the {phi.shape[0]} given amplification curves")
    return np.prod(phi[:l] ** 2, axis=0)


def layer_variance(profile: SpectralProfile, phi, l: int) -> float:
    if l < 0:
        raise SpectralError("layer index must be non-negative")
    g = _gain_powers(phi, l, len(profile))
    return 0.5 * float(np.sum(g * profile.amplitudes ** 2))


def layer_bwe_with_trend(profile: SpectralProfile, phi, l: int, tau: float = 0.0, n_market: int = 1) -> float:
    """Layer BWE with a trend of variance ``tau`` per market sequence.

    A trend passes every layer unamplified, so it adds the same
    ``tau * n_market^2`` to the output and input variance.
    """
    if l < 1:
        raise SpectralError("layer BWE is defined for l >= 1")
    if tau < 0 or n_market < 1:
        raise SpectralError("need tau >= 0 and n_market >= 1")
    extra = tau * n_market * n_market
    den = layer_variance(profile, phi, l - 1) + extra
    if den <= 0:
        raise SpectralError("input has zero variance")
    return math.sqrt((layer_variance(profile, phi, l) + extra) / den)


def layer_bwe_analytical(profile: SpectralProfile, phi, l: int) -> float:
    if profile.is_flat:
        raise SpectralError("all amplitudes are zero")
    return layer_bwe_with_trend(profile, phi, l)


def layer_bwe_curve(profile: SpectralProfile, phi, depth: int, tau: float = 0.0, n_market: int = 1) -> np.ndarray:
    return np.array([layer_bwe_with_trend(profile, phi, l, tau, n_market) for l in range(1, depth + 1)])


def eta_first_layer(p: PolicyParams, phi_ar):
    """First-layer variance ratio for AR(1) demand with coefficient ``phi_ar``."""
    a = np.asarray(phi_ar, dtype=float)
    if np.any(np.abs(a) >= 1):
        raise SpectralError("AR coefficient must lie inside (-1, 1)")
    r = p.L / p.P
    eta = (r + 1) ** 2 + r * r - 2 * r * (r + 1) * a ** p.P
    return float(eta) if eta.ndim == 0 else eta


def eta_with_trend(p: PolicyParams, phi_ar, tau: float):
    if tau < 0:
        raise SpectralError("tau must be non-negative")
    a = np.asarray(phi_ar, dtype=float)
    eta = eta_first_layer(p, a)
    alpha = 1.0 / (1.0 - a * a)
    out = (alpha * eta + tau) / (alpha + tau)
    return float(out) if np.ndim(out) == 0 else out


def save_spectrum_csv(profile: SpectralProfile, path: str | Path) -> None:
    n = np.arange(1, len(profile) + 1)
    rows = np.column_stack([n, profile.frequencies, profile.amplitudes])
    np.savetxt(path, rows, delimiter=",", header="n,omega,amplitude", comments="", fmt=["%d", "%.17g", "%.17g"])


def save_amplification_csv(p: PolicyParams, omegas: np.ndarray, path: str | Path) -> None:
    rows = np.column_stack([omegas, amplification_rate(p, omegas)])
    np.savetxt(path, rows, delimiter=",", header="omega,phi", comments="", fmt="%.17g")
