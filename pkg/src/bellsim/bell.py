"""Bell observable, CHSH evaluation and the search for the maximal |S|."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .correlation import (
    CorrelationEstimate,
    CorrelationModel,
    correlation_analytic,
    correlation_mc,
    expectation,
    wrap_angle,
)
from .errors import ConfigError, DomainError

_RANGE_SLACK = 1e-9

PAIR_LABELS = ("ab", "a'b", "ab'", "a'b'")


def bell_observable(e1: float, e2: float, e3: float, e4: float) -> float:
    """Signed S = (E_ab + E_a'b + E_ab' - E_a'b') / 2."""
    for e in (e1, e2, e3, e4):
        if not abs(e) <= 1.0 + _RANGE_SLACK:
            raise DomainError(f"correlation {e!r} lies outside [-1, 1]")
    return 0.5 * (e1 + e2 + e3 - e4)


@dataclass(frozen=True)
class CHSHSettings:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"setting {name} must be finite, got {v}")
            object.__setattr__(self, name, wrap_angle(float(v)))

    @classmethod
    def canonical(cls) -> "CHSHSettings":
        """a=0, a'=pi/2, b=pi/4, b'=-pi/4: the maximizing choice for the cosine model."""
        return cls(0.0, math.pi / 2, math.pi / 4, -math.pi / 4)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.a_prime, self.b, self.b_prime)

    def differences(self) -> tuple[float, float, float, float]:
        """Angle differences (a-b, a'-b, a-b', a'-b')."""
        a, ap, b, bp = self.as_tuple()
        return (a - b, ap - b, a - bp, ap - bp)


@dataclass(frozen=True)
class BellResult:
    settings: CHSHSettings
    correlations: tuple[CorrelationEstimate, ...]
    S: float
    S_stderr: float

    @property
    def abs_S(self) -> float:
        return abs(self.S)

    def recombined(self) -> float:
        return bell_observable(*(c.value for c in self.correlations))


def chsh(model: CorrelationModel, settings: CHSHSettings, n: int | None = None,
         seed=0, shards: int = 1, threads: int = 1) -> BellResult:
    """Evaluate S for one set of analyzer angles.

    ``n=None`` is analytic; otherwise each of the four correlations is a
    Monte Carlo estimate with ``n`` samples keyed by ``(seed, pair_index)``.
    """
    diffs = settings.differences()
    if n is None:
        corr = tuple(correlation_analytic(model, d) for d in diffs)
        s_err = 0.0
    else:
        base = [int(seed)] if isinstance(seed, (int, np.integer)) else list(seed)

        def one(j):
            return correlation_mc(model, diffs[j], n, base + [j], shards=shards)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                corr = tuple(pool.map(one, range(4)))
        else:
            corr = tuple(one(j) for j in range(4))
        s_err = 0.5 * math.sqrt(sum(c.stderr**2 for c in corr))
    S = bell_observable(*(c.value for c in corr))
    return BellResult(settings, corr, S, s_err)


def s_values(model: CorrelationModel, a, ap, b, bp):
    """Analytic signed S, broadcasting over array arguments."""
    e = expectation
    return 0.5 * (e(model, np.subtract(a, b)) + e(model, np.subtract(ap, b))
                  + e(model, np.subtract(a, bp)) - e(model, np.subtract(ap, bp)))


def _lattice_block(model, grid, i):
    # |S| for a = grid[i] over the remaining three axes
    ap = grid[:, None, None]
    b = grid[None, :, None]
    bp = grid[None, None, :]
    return np.abs(s_values(model, grid[i], ap, b, bp))


def scan_max(model: CorrelationModel, grid_n: int, refine_iters: int,
             threads: int = 1) -> tuple[CHSHSettings, float]:
    """Maximize |S| over the four analyzer angles.

    A grid_n^4 lattice on [0, pi)^4 is searched exhaustively; the best point
    is then refined by coordinate descent, halving the step after each round.
    Moving one station's angle by pi only negates its outcomes and relabels
    the CHSH combination, so [0, pi)^4 holds the global maximum of |S|.
    Ties keep the first lattice point in C order.
    """
    if grid_n < 2:
        raise ConfigError(f"grid_n must be >= 2, got {grid_n}")
    if refine_iters < 0:
        raise ConfigError(f"refine_iters must be >= 0, got {refine_iters}")
    grid = np.arange(grid_n) * (math.pi / grid_n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda i: _lattice_block(model, grid, i), range(grid_n)))
    else:
        blocks = [_lattice_block(model, grid, i) for i in range(grid_n)]
    maxima = [float(blk.max()) for blk in blocks]
    i = int(np.argmax(maxima))
    j, k, m = np.unravel_index(int(np.argmax(blocks[i])), blocks[i].shape)
    x = [float(grid[i]), float(grid[j]), float(grid[k]), float(grid[m])]
    best = maxima[i]

    step = math.pi / grid_n
    for _ in range(refine_iters):
        for axis in range(4):
            for delta in (step, -step):
                trial = list(x)
                trial[axis] += delta
                val = abs(float(s_values(model, *trial)))
                if val > best:
                    best, x = val, trial
        step *= 0.5
    return CHSHSettings(*x), best
