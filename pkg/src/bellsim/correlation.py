"""Two-station correlation models E(theta).

``cosine_projection`` is the metric-projection model: the hidden variable is
a planar unit vector at angle alpha from analyzer A, and

    E(theta) = (1/pi) * integral_0^2pi cos(alpha) cos(alpha + theta) d alpha = cos(theta).

``classical_sign`` is a deterministic local model where each station
reports the sign of the projection; it gives E = 1 - 2|theta|/pi.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .geometry import Metric, cos_angle_many, minkowski_metric

COSINE = "cosine_projection"
SIGN = "classical_sign"
MODELS = (COSINE, SIGN)

# Short names accepted at the CLI surface.
ALIASES = {"cosine": COSINE, "sign": SIGN, COSINE: COSINE, SIGN: SIGN}

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Reduce to [0, 2pi)."""
    r = math.fmod(angle, TWO_PI)
    if r < 0:
        r += TWO_PI
    return 0.0 if r >= TWO_PI else r


@dataclass(frozen=True)
class AnalyzerSetting:
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ConfigError(f"analyzer angle must be finite, got {self.angle}")
        object.__setattr__(self, "angle", wrap_angle(float(self.angle)))

    def direction(self) -> np.ndarray:
        return np.array([0.0, math.cos(self.angle), math.sin(self.angle), 0.0])


@dataclass(frozen=True)
class HiddenVariableSample:
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap_angle(float(self.alpha)))


@dataclass(frozen=True)
class CorrelationModel:
    variant: str = COSINE
    metric: Metric = field(default_factory=minkowski_metric)

    def __post_init__(self):
        if self.variant not in ALIASES:
            raise ConfigError(
                f"unknown correlation model {self.variant!r}; valid models: "
                + ", ".join(sorted(set(ALIASES))))
        object.__setattr__(self, "variant", ALIASES[self.variant])

    @classmethod
    def named(cls, name: str) -> "CorrelationModel":
        return cls(name)


@dataclass(frozen=True)
class CorrelationEstimate:
    """A correlation value; ``n_samples == 0`` marks an analytic result."""

    value: float
    stderr: float = 0.0
    n_samples: int = 0

    @property
    def analytic(self) -> bool:
        return self.n_samples == 0


def folded_difference(theta):
    """|theta| folded into [0, pi]; works on scalars and arrays."""
    r = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    return np.minimum(r, TWO_PI - r)


def expectation(model: CorrelationModel, theta):
    """Analytic E(theta), vectorized over ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if model.variant == COSINE:
        out = np.cos(theta)
    else:
        out = 1.0 - 2.0 * folded_difference(theta) / math.pi
    return out if out.ndim else float(out)


def correlation_analytic(model: CorrelationModel, theta: float) -> CorrelationEstimate:
    return CorrelationEstimate(float(expectation(model, theta)), 0.0, 0)


def sign_outcome(alpha, setting: AnalyzerSetting):
    """+1 where cos(alpha - angle) >= 0, else -1; ties go to +1."""
    c = np.cos(np.asarray(alpha, dtype=float) - setting.angle)
    out = np.where(c >= 0.0, 1.0, -1.0)
    return int(out) if out.ndim == 0 else out


def shard_sizes(n: int, shards: int) -> list[int]:
    """Split ``n`` samples into ``shards`` near-equal parts, larger ones first."""
    if shards < 1:
        raise ConfigError(f"shards must be >= 1, got {shards}")
    base, extra = divmod(n, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def _seed_key(seed) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def sample_products(model: CorrelationModel, theta: float, n: int, key: Sequence[int],
                    a_angle: float = 0.0) -> np.ndarray:
    """Per-sample outcome products for one shard.

    The hidden vector sits at angle ``a - alpha`` so that it makes angle
    alpha with A and alpha + theta with B = a + theta.
    """
    rng = np.random.default_rng(list(key))
    alpha = rng.uniform(0.0, TWO_PI, n)
    lam_angle = a_angle - alpha
    a = AnalyzerSetting(a_angle)
    b = AnalyzerSetting(a_angle + theta)
    if model.variant == SIGN:
        return sign_outcome(lam_angle, a) * sign_outcome(lam_angle, b)
    lams = np.zeros((n, 4))
    lams[:, 1] = np.cos(lam_angle)
    lams[:, 2] = np.sin(lam_angle)
    proj = cos_angle_many(model.metric, lams, np.stack([a.direction(), b.direction()]))
    return 2.0 * proj[:, 0] * proj[:, 1]


def correlation_mc(model: CorrelationModel, theta: float, n: int, seed=0,
                   shards: int = 1, threads: int = 1) -> CorrelationEstimate:
    """Monte Carlo estimate of E(theta) with alpha uniform on [0, 2pi).

    Shard ``i`` draws from a generator keyed by ``(*seed, i)``; shards are
    concatenated in index order, so the result depends on the shard plan
    but never on ``threads``.  ``n == 1`` gives an infinite stderr.
    """
    if int(n) < 1:
        raise ConfigError(f"number of samples must be >= 1, got {n}")
    key = _seed_key(seed)
    sizes = shard_sizes(int(n), shards)
    jobs = [(model, theta, size, key + [i]) for i, size in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: sample_products(*j), jobs))
    else:
        parts = [sample_products(*j) for j in jobs]
    x = np.concatenate(parts)
    mean = float(np.mean(x))
    if x.size > 1:
        stderr = float(np.std(x, ddof=1)) / math.sqrt(x.size)
    else:
        stderr = math.inf
    return CorrelationEstimate(mean, stderr, int(x.size))
