"""Deviation oscillator  l'' + c^2 R^1_010(t) l = 0  for a pair of test particles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import SI, SpacetimePoint
from .gw_background import GWBackground, riemann_R1010_series, strain_at


@dataclass(frozen=True)
class OscillatorState:
    ell: float
    ell_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.ell) and math.isfinite(self.ell_dot)):
            raise DomainError("oscillator state must be finite")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration plan.

    ``record_every`` keeps one sample per that many steps, so the
    trajectory spacing is ``dt * record_every``.
    """

    dt: float
    n_steps: int
    method: str = "rk4"
    record_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.method not in ("rk4", "closed-form"):
            raise ConfigError(f"unknown method {self.method!r}; expected rk4 or closed-form")
        if int(self.record_every) < 1 or self.n_steps % self.record_every:
            raise ConfigError(
                f"record_every={self.record_every} must be >= 1 and divide n_steps={self.n_steps}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    t0: float
    dt: float
    ell: np.ndarray
    ell_dot: np.ndarray

    def __post_init__(self):
        ell = np.array(self.ell, dtype=float)
        ell_dot = np.array(self.ell_dot, dtype=float)
        if ell.ndim != 1 or ell.shape != ell_dot.shape or ell.size < 2:
            raise ValueError("trajectory needs two equal-length series of >= 2 samples")
        if not self.dt > 0:
            raise ValueError(f"trajectory dt must be positive, got {self.dt}")
        ell.flags.writeable = False
        ell_dot.flags.writeable = False
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "ell_dot", ell_dot)

    def __len__(self):
        return self.ell.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.ell.size)

    @property
    def samples(self) -> list[OscillatorState]:
        return [OscillatorState(float(a), float(b)) for a, b in zip(self.ell, self.ell_dot)]

    @property
    def final(self) -> OscillatorState:
        return OscillatorState(float(self.ell[-1]), float(self.ell_dot[-1]))

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.t0 == other.t0 and self.dt == other.dt
                and np.array_equal(self.ell, other.ell)
                and np.array_equal(self.ell_dot, other.ell_dot))

    __hash__ = None


def angular_frequency(R1010: float, c: float = SI.c) -> float:
    if R1010 < 0:
        raise DomainError(
            f"R1010 = {R1010:g} < 0: the deviation equation is not oscillatory here")
    return c * math.sqrt(R1010)


def evolve_closed_form(s0: OscillatorState, omega: float, t: float) -> OscillatorState:
    """Exact evolution of l'' + omega^2 l = 0 over time ``t``."""
    if omega < 0:
        raise DomainError(f"omega must be >= 0, got {omega}")
    if omega == 0:
        return OscillatorState(s0.ell + s0.ell_dot * t, s0.ell_dot)
    c, s = math.cos(omega * t), math.sin(omega * t)
    return OscillatorState(
        s0.ell * c + (s0.ell_dot / omega) * s,
        -s0.ell * omega * s + s0.ell_dot * c,
    )


def _forcing_samples(R_of_t, t0, dt, n_steps, vectorized):
    # w(t) = c^2 R(t) at t0 + j*dt/2, j = 0..2n
    times = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
    if vectorized:
        return np.asarray(R_of_t(times), dtype=float)
    return np.array([R_of_t(float(t)) for t in times], dtype=float)


def integrate(s0: OscillatorState, R_of_t: Callable, cfg: IntegratorConfig,
              c: float = SI.c, t0: float = 0.0, vectorized: bool = False) -> Trajectory:
    """Integrate l'' = -c^2 R(t) l from ``t0`` with fixed steps.

    ``rk4`` is the classic fourth-order Runge-Kutta scheme on (l, l').
    ``closed-form`` requires a constant R and uses :func:`evolve_closed_form`.
    With ``vectorized=True`` R_of_t is called once on an array of times.
    """
    dt, n = cfg.dt, int(cfg.n_steps)
    stride = int(cfg.record_every)

    if cfg.method == "closed-form":
        r_const = float(R_of_t(np.array([t0]))[0] if vectorized else R_of_t(t0))
        omega = angular_frequency(r_const, c)
        ks = np.arange(0, n + 1, stride)
        states = [evolve_closed_form(s0, omega, k * dt) for k in ks]
        return Trajectory(t0, dt * stride, [s.ell for s in states],
                          [s.ell_dot for s in states])

    w = (c * c * _forcing_samples(R_of_t, t0, dt, n, vectorized)).tolist()
    x, v = float(s0.ell), float(s0.ell_dot)
    half = 0.5 * dt
    sixth = dt / 6.0
    xs = [x]
    vs = [v]
    for i in range(n):
        w0, wh, w1 = w[2 * i], w[2 * i + 1], w[2 * i + 2]
        k1x, k1v = v, -w0 * x
        k2x, k2v = v + half * k1v, -wh * (x + half * k1x)
        k3x, k3v = v + half * k2v, -wh * (x + half * k2x)
        k4x, k4v = v + dt * k3v, -w1 * (x + dt * k3x)
        x += sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v += sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if (i + 1) % stride == 0:
            xs.append(x)
            vs.append(v)
    return Trajectory(t0, dt * stride, xs, vs)


def default_dt(bg: GWBackground) -> float:
    """Shortest mode period / 200."""
    if not bg.modes:
        raise ConfigError("an empty background has no natural time step; pass dt explicitly")
    return bg.shortest_period / 200.0


def freefall_state(bg: GWBackground, position, ell0: float = 1.0, t0: float = 0.0) -> OscillatorState:
    """Initial state of a pair held at fixed TT coordinates with separation ``ell0``.

    To first order in h the proper separation is ell0 (1 + h_11 / 2), so
    starting from here the trajectory has no secular drift.
    """
    if not bg.modes:
        return OscillatorState(ell0, 0.0)
    x, y, z = (float(v) for v in position)
    h11 = strain_at(bg, SpacetimePoint(t0, x, y, z))[1, 1]
    a = bg._arrays
    ph = bg.phases(t0, position)[0]
    dh11 = float(np.sum(-2.0 * a["e"][:, 1, 1] * a["omega"] * np.sin(ph)))
    return OscillatorState(ell0 * (1.0 + 0.5 * h11), 0.5 * ell0 * dh11)


def integrate_in_background(s0: OscillatorState, bg: GWBackground, position,
                            cfg: IntegratorConfig, c: float | None = None,
                            t0: float = 0.0) -> Trajectory:
    """Integrate with R(t) = riemann_R1010(bg, (t, position)).

    R may change sign along the way; only :func:`angular_frequency` refuses
    negative curvature.
    """
    c = bg.c if c is None else c
    pos = np.asarray(position, dtype=float)
    if pos.shape != (3,):
        raise ConfigError(f"position must be a 3-vector, got shape {pos.shape}")
    if cfg.method != "rk4":
        raise ConfigError("a background drives a time-dependent R; use method rk4")
    return integrate(s0, lambda ts: riemann_R1010_series(bg, ts, pos), cfg, c=c, t0=t0,
                     vectorized=True)


def phase_correlation(a: Trajectory, b: Trajectory) -> float:
    """Zero-lag Pearson correlation of the two displacement series."""
    if len(a) != len(b) or a.dt != b.dt:
        raise ValueError(
            f"trajectories must share length and dt (got {len(a)}/{a.dt} vs {len(b)}/{b.dt})")
    if len(a) < 16:
        raise ValueError(f"need at least 16 samples, got {len(a)}")
    x = a.ell - np.mean(a.ell)
    y = b.ell - np.mean(b.ell)
    sxx = float(np.dot(x, x))
    syy = float(np.dot(y, y))
    if sxx == 0.0 or syy == 0.0:
        raise DomainError("correlation is undefined for a constant series")
    # sqrt(d*d) == d exactly, so identical series give exactly 1
    r = float(np.dot(x, y)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
