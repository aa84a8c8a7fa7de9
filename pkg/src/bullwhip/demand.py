"""Market demand generators and AR(1) hyperparameter sampling."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal, stats


class DemandError(ValueError):
    pass


class DemandKind(str, enum.Enum):
    PARAMETRIC = "Parametric"
    AR1 = "Ar1"
    TREND_AR1 = "TrendAr1"


def derive_seed(root: int, *keys: int) -> int:
    """Sub-seed for stream ``keys`` under ``root``.

    The rule is ``SeedSequence([root, *keys]).generate_state(1)[0]``, so a
    replication's seed depends only on its own keys and parallel runs
    reproduce serial ones exactly.
    """
    return int(np.random.SeedSequence([int(root), *map(int, keys)]).generate_state(1)[0])


def alias_frequency(v: float) -> float:
    """Frequency (cycles/period) seen at integer sampling, folded into [0, 0.5]."""
    f = math.fmod(abs(v), 1.0)
    return min(f, 1.0 - f)


@dataclass(frozen=True)
class DemandModel:
    kind: DemandKind = DemandKind.PARAMETRIC
    base: float = 0.0
    trend: float = 0.0
    seasonal: tuple[tuple[float, float], ...] = ()
    noise_sd: float = 0.0
    ar_coeff: float = 0.0
    horizon: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", DemandKind(self.kind))
        object.__setattr__(self, "seasonal", tuple((float(g), float(v)) for g, v in self.seasonal))
        if self.noise_sd < 0:
            raise DemandError(f"noise_sd={self.noise_sd} is negative")
        if self.horizon < 2:
            raise DemandError(f"horizon={self.horizon} is below 2")
        if self.kind is not DemandKind.PARAMETRIC and not abs(self.ar_coeff) < 1:
            raise DemandError(f"AR coefficient {self.ar_coeff} is not inside (-1, 1)")

    @property
    def name(self) -> str:
        parts = [self.kind.value, f"c={self.base:g}", f"a={self.trend:g}"]
        parts += [f"{g:g}sin(2pi*{v:g}t)" for g, v in self.seasonal]
        parts.append(f"sd={self.noise_sd:g}")
        if self.kind is not DemandKind.PARAMETRIC:
            parts.append(f"phi={self.ar_coeff:g}")
        return " ".join(parts)

    @property
    def aliased_components(self) -> list[tuple[float, float, float]]:
        """(amplitude, stated frequency, sampled frequency) for components that alias."""
        return [(g, v, alias_frequency(v)) for g, v in self.seasonal if alias_frequency(v) != v]

    def replace(self, **changes) -> "DemandModel":
        return DemandModel(**{**self.__dict__, **changes})


def _seasonal(t: np.ndarray, seasonal) -> np.ndarray:
    out = np.zeros(t.shape)
    for gamma, v in seasonal:
        f = alias_frequency(v)
        # bins 0 and 1/2 sample sin() at its zeros
        if f == 0.0 or f == 0.5:
            continue
        sign = 1.0 if math.fmod(abs(v), 1.0) <= 0.5 else -1.0
        out += math.copysign(1.0, v) * sign * gamma * np.sin(2 * np.pi * f * t)
    return out


def _ar1(rng: np.random.Generator, phi: float, sd: float, T: int) -> np.ndarray:
    eps = rng.normal(0.0, sd, T)
    eps[0] = rng.normal(0.0, sd / math.sqrt(1.0 - phi * phi)) if sd > 0 else 0.0
    return signal.lfilter([1.0], [1.0, -phi], eps)


def generate(model: DemandModel) -> np.ndarray:
    """Demand for t = 1..T (array index 0 is t = 1)."""
    T = model.horizon
    rng = np.random.default_rng(model.seed)
    t = np.arange(1, T + 1, dtype=float)
    if model.kind is DemandKind.AR1:
        return _ar1(rng, model.ar_coeff, model.noise_sd, T)
    y = model.base + model.trend * t + _seasonal(t, model.seasonal)
    if model.kind is DemandKind.TREND_AR1:
        return y + _ar1(rng, model.ar_coeff, model.noise_sd, T)
    if model.noise_sd > 0:
        y = y + rng.normal(0.0, model.noise_sd, T)
    return y


class PriorKind(str, enum.Enum):
    UNIFORM_OPEN = "UniformOpen"
    TRUNCATED_NORMAL = "TruncatedNormal"


@dataclass(frozen=True)
class HyperPrior:
    kind: PriorKind = PriorKind.UNIFORM_OPEN
    lower: float = -1.0
    upper: float = 1.0
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PriorKind(self.kind))
        if not -1.0 <= self.lower < self.upper <= 1.0:
            raise DemandError(f"prior support ({self.lower}, {self.upper}) is not inside (-1, 1)")
        if self.kind is PriorKind.TRUNCATED_NORMAL and self.sd <= 0:
            raise DemandError("truncated normal needs a positive sd")

    @classmethod
    def uniform(cls, lower=-1.0, upper=1.0) -> "HyperPrior":
        return cls(PriorKind.UNIFORM_OPEN, lower, upper)

    @classmethod
    def truncated_normal(cls, mean=0.0, sd=1.0, lower=-1.0, upper=1.0) -> "HyperPrior":
        return cls(PriorKind.TRUNCATED_NORMAL, lower, upper, mean, sd)

    @property
    def label(self) -> str:
        if self.kind is PriorKind.UNIFORM_OPEN:
            return f"U({self.lower:g},{self.upper:g})"
        return f"TN({self.mean:g},{self.sd:g},{self.lower:g},{self.upper:g})"

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind is PriorKind.UNIFORM_OPEN:
            x = rng.uniform(self.lower, self.upper, size)
        else:
            a = (self.lower - self.mean) / self.sd
            b = (self.upper - self.mean) / self.sd
            x = stats.truncnorm.rvs(a, b, loc=self.mean, scale=self.sd, size=size, random_state=rng)
        # open interval: uniform() can return the lower edge exactly
        return np.clip(x, np.nextafter(self.lower, self.upper), np.nextafter(self.upper, self.lower))


def sample_ar_coeffs(prior: HyperPrior, M: int, seed: int) -> np.ndarray:
    if M < 0:
        raise DemandError("M must be non-negative")
    return prior.draw(np.random.default_rng(seed), M)


def ar1_variance(phi: float, sigma: float = 1.0) -> float:
    if not abs(phi) < 1:
        raise DemandError(f"AR coefficient {phi} is not inside (-1, 1)")
    return sigma * sigma / (1.0 - phi * phi)


def trend_variance(a: float, T: int) -> float:
    """Population variance of a*t over t = 1..T."""
    return a * a * (T * T - 1) / 12.0


def ar1_spectrum_amplitudes(phi: float, sigma: float, N: int) -> np.ndarray:
    """Expected squared DFT amplitudes E[A_n^2], n = 1..N/2-1, of a stationary AR(1)."""
    n = np.arange(1, N // 2)
    w = 2 * np.pi * n / N
    density = sigma * sigma / np.abs(1.0 - phi * np.exp(-1j * w)) ** 2
    return 4.0 * density / N


def save_demand_csv(seq: Sequence[float], path: str | Path, name: str = "demand") -> None:
    with open(path, "w") as fh:
        fh.write(f"{name}\n")
        for v in seq:
            fh.write(f"{float(v)!r}\n")


def load_demand_csv(path: str | Path) -> tuple[str, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    return lines[0], np.array([float(x) for x in lines[1:] if x.strip()])


def ar1_paths(phis: np.ndarray, T: int, rng: np.random.Generator, sigma: float = 1.0) -> np.ndarray:
    """Stationary AR(1) paths, one row per coefficient in ``phis`` (any shape)."""
    phis = np.asarray(phis, dtype=float)
    if np.any(np.abs(phis) >= 1):
        raise DemandError("AR coefficients must lie inside (-1, 1)")
    flat = phis.reshape(-1)
    eps = rng.normal(0.0, sigma, (T, flat.size))
    out = np.empty_like(eps)
    out[0] = eps[0] / np.sqrt(1.0 - flat * flat)
    for t in range(1, T):
        out[t] = flat * out[t - 1] + eps[t]
    return out.T.reshape(*phis.shape, T)
