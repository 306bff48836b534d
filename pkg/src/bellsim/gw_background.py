"""Isotropic background of weak plane gravitational waves.

Each mode is stored in real form,

    h_mu_nu(t, x) = 2 e_mu_nu cos(omega t - k.x + phi0),

with a transverse-traceless polarization tensor ``e``.  The curvature
component driving the deviation oscillator is the linearized

    R^1_010 = -(1 / 2c^2) d^2 h_11 / dt^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import SI, WEAK_FIELD_THRESHOLD, SpacetimePoint

_ETA_DIAG = np.array([1.0, -1.0, -1.0, -1.0])

# Rows of R1010 evaluated per vectorized chunk; bounds memory at n_modes * this.
_CHUNK = 4096


def mode_frame(k) -> np.ndarray:
    """Orthonormal frame (p, q, k_hat) as columns, built from the wavevector.

    p and q are the polar and azimuthal unit vectors of the direction of
    ``k``, so the frame is a deterministic function of ``k`` alone.
    """
    k = np.asarray(k, dtype=float)
    norm = math.sqrt(float(k @ k))
    if norm == 0.0:
        raise ValueError("wavevector must be non-zero")
    cos_t = min(1.0, max(-1.0, float(k[2]) / norm))
    sin_t = math.sqrt(1.0 - cos_t * cos_t)
    phi = math.atan2(float(k[1]), float(k[0]))
    cp, sp = math.cos(phi), math.sin(phi)
    p = np.array([cos_t * cp, cos_t * sp, -sin_t])
    q = np.array([-sp, cp, 0.0])
    khat = np.array([sin_t * cp, sin_t * sp, cos_t])
    return np.column_stack([p, q, khat])


def tt_tensor(e11: float, e12: float, e22: float, k) -> np.ndarray:
    """Full 4x4 polarization tensor from its mode-frame TT components."""
    local = np.array([[e11, e12, 0.0], [e12, e22, 0.0], [0.0, 0.0, 0.0]])
    rot = mode_frame(k)
    spatial = rot @ local @ rot.T
    spatial = 0.5 * (spatial + spatial.T)
    e = np.zeros((4, 4))
    e[1:, 1:] = spatial
    return e


@dataclass(frozen=True, eq=False)
class GWMode:
    e: np.ndarray
    k_spatial: np.ndarray
    omega_g: float
    phi0: float
    # Mode-frame (e11, e12, e22); None when the mode was built from a raw tensor.
    tt_local: tuple[float, float, float] | None = None

    def __post_init__(self):
        e = np.array(self.e, dtype=float)
        k = np.array(self.k_spatial, dtype=float)
        if e.shape != (4, 4) or k.shape != (3,):
            raise ValueError("GWMode needs a 4x4 polarization and a 3-vector k")
        e.flags.writeable = False
        k.flags.writeable = False
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "k_spatial", k)
        object.__setattr__(self, "omega_g", float(self.omega_g))
        object.__setattr__(self, "phi0", float(self.phi0))

    @classmethod
    def from_tt(cls, e11, e12, e22, k, omega_g, phi0) -> "GWMode":
        k = np.asarray(k, dtype=float)
        return cls(tt_tensor(e11, e12, e22, k), k, omega_g, phi0,
                   (float(e11), float(e12), float(e22)))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_g

    def local_components(self) -> tuple[float, float, float]:
        if self.tt_local is not None:
            return self.tt_local
        rot = mode_frame(self.k_spatial)
        local = rot.T @ self.e[1:, 1:] @ rot
        return float(local[0, 0]), float(local[0, 1]), float(local[1, 1])

    def __eq__(self, other):
        if not isinstance(other, GWMode):
            return NotImplemented
        return (np.array_equal(self.e, other.e)
                and np.array_equal(self.k_spatial, other.k_spatial)
                and self.omega_g == other.omega_g
                and self.phi0 == other.phi0)

    __hash__ = None


@dataclass(frozen=True)
class BackgroundConfig:
    """Concrete choice of the hidden-variable distribution rho(h).

    Directions are isotropic, phases uniform, angular frequencies
    log-uniform on ``[freq_min, freq_max]`` (rad/s), and every mode has
    strain amplitude ``amplitude_scale / n_modes``.
    """

    n_modes: int = 64
    amplitude_scale: float = 1e-7
    freq_min: float = 1.0
    freq_max: float = 10.0
    seed: int = 0

    def validate(self):
        if not isinstance(self.n_modes, (int, np.integer)) or self.n_modes < 0:
            raise ConfigError(f"n_modes must be a non-negative integer, got {self.n_modes!r}")
        if not (0 < self.freq_min <= self.freq_max and math.isfinite(self.freq_max)):
            raise ConfigError(
                f"need 0 < freq_min <= freq_max, got {self.freq_min}, {self.freq_max}")
        if not self.amplitude_scale >= 0:
            raise ConfigError(f"amplitude_scale must be >= 0, got {self.amplitude_scale}")
        if not self.amplitude_scale * 2 * self.n_modes < WEAK_FIELD_THRESHOLD:
            raise ConfigError(
                f"amplitude_scale*2*n_modes = {self.amplitude_scale * 2 * self.n_modes:g} "
                f"breaks the weak-field threshold {WEAK_FIELD_THRESHOLD:g}")


@dataclass(frozen=True, eq=False)
class GWBackground:
    modes: tuple[GWMode, ...]
    config: BackgroundConfig | None = None
    seed: int | None = None
    c: float = SI.c
    _arrays: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        n = len(self.modes)
        arrays = {
            "e": np.array([m.e for m in self.modes]).reshape(n, 4, 4),
            "k": np.array([m.k_spatial for m in self.modes]).reshape(n, 3),
            "omega": np.array([m.omega_g for m in self.modes], dtype=float),
            "phi0": np.array([m.phi0 for m in self.modes], dtype=float),
        }
        for a in arrays.values():
            a.flags.writeable = False
        object.__setattr__(self, "_arrays", arrays)

    def __len__(self):
        return len(self.modes)

    def __add__(self, other: "GWBackground") -> "GWBackground":
        return GWBackground(self.modes + other.modes, c=self.c)

    def __eq__(self, other):
        if not isinstance(other, GWBackground):
            return NotImplemented
        return self.modes == other.modes and self.c == other.c

    __hash__ = None

    @property
    def shortest_period(self) -> float:
        if not self.modes:
            return math.inf
        return 2.0 * math.pi / float(np.max(self._arrays["omega"]))

    def phases(self, t, position) -> np.ndarray:
        """omega t - k.x + phi0, shape (len(t), n_modes)."""
        a = self._arrays
        t = np.atleast_1d(np.asarray(t, dtype=float))
        kx = a["k"] @ np.asarray(position, dtype=float)
        return t[:, None] * a["omega"][None, :] - kx[None, :] + a["phi0"][None, :]


def sample_background(config: BackgroundConfig, seed: int | None = None,
                      c: float = SI.c) -> GWBackground:
    """Draw an isotropic background; identical seeds give identical modes."""
    config.validate()
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    n = int(config.n_modes)
    cos_theta = rng.uniform(-1.0, 1.0, n)
    azimuth = rng.uniform(0.0, 2.0 * math.pi, n)
    phi0 = rng.uniform(0.0, 2.0 * math.pi, n)
    omega = np.exp(rng.uniform(math.log(config.freq_min), math.log(config.freq_max), n))
    mix = rng.uniform(0.0, 2.0 * math.pi, n)

    amp = config.amplitude_scale / n if n else 0.0
    sin_theta = np.sqrt(1.0 - cos_theta**2)
    modes = []
    for i in range(n):
        khat = np.array([sin_theta[i] * math.cos(azimuth[i]),
                         sin_theta[i] * math.sin(azimuth[i]),
                         cos_theta[i]])
        k = (omega[i] / c) * khat
        plus = amp * math.cos(mix[i])
        cross = amp * math.sin(mix[i])
        modes.append(GWMode.from_tt(plus, cross, -plus, k, omega[i], phi0[i]))
    return GWBackground(tuple(modes), config=config, seed=seed, c=c)


def strain_at(bg: GWBackground, p: SpacetimePoint) -> np.ndarray:
    """Metric perturbation h_mu_nu at a spacetime point."""
    if not bg.modes:
        return np.zeros((4, 4))
    weights = 2.0 * np.cos(bg.phases(p.t, p.position)[0])
    return np.einsum("n,nij->ij", weights, bg._arrays["e"])


def riemann_R1010_series(bg: GWBackground, times, position) -> np.ndarray:
    """R^1_010 along a worldline at fixed ``position`` (units 1/m^2)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros(times.shape)
    if not bg.modes:
        return out
    a = bg._arrays
    coeff = a["omega"] ** 2 * a["e"][:, 1, 1] / bg.c**2
    for start in range(0, times.size, _CHUNK):
        chunk = times[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.sum(coeff[None, :] * np.cos(bg.phases(chunk, position)),
                                           axis=1)
    return out


def riemann_R1010(bg: GWBackground, p: SpacetimePoint) -> float:
    """Linearized R^1_010 = -(1/2c^2) d^2h_11/dt^2 in closed form."""
    return float(riemann_R1010_series(bg, [p.t], p.position)[0])


@dataclass(frozen=True)
class ModeReport:
    symmetric: bool
    traceless: bool
    transverse: bool
    null_wavevector: bool
    weak_field: bool
    trace: float
    transversality: float
    null_residual: float

    @property
    def ok(self) -> bool:
        return (self.symmetric and self.traceless and self.transverse
                and self.null_wavevector and self.weak_field)


def validate_mode(m: GWMode, n_modes: int = 1, c: float = SI.c, tol: float = 1e-12) -> ModeReport:
    """Check the gauge conditions of one mode; never raises.

    Trace and transversality residuals are relative to max|e|, the null
    residual is k_g k^g in units of (omega/c)^2.
    """
    e = m.e
    scale = float(np.max(np.abs(e)))
    ref = scale if scale > 0 else 1.0
    trace = float(np.sum(_ETA_DIAG * np.diag(e))) / ref

    k0 = m.omega_g / c
    if k0 > 0:
        k_up = np.concatenate([[1.0], m.k_spatial / k0])
        null = 1.0 - float(m.k_spatial @ m.k_spatial) / k0**2
        transv = float(np.max(np.abs(e @ k_up))) / ref
    else:
        null = math.inf
        transv = math.inf
    return ModeReport(
        symmetric=bool(np.array_equal(e, e.T)),
        traceless=abs(trace) <= tol,
        transverse=transv <= tol,
        null_wavevector=abs(null) <= tol,
        weak_field=scale < WEAK_FIELD_THRESHOLD / (2 * max(n_modes, 1)),
        trace=trace,
        transversality=transv,
        null_residual=null,
    )
