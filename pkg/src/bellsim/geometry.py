"""Four-vectors and weakly perturbed metrics.

Signature is (+, -, -, -) with index 0 temporal.  All objects are immutable
and every function here is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Largest admissible |h_mu_nu| (exclusive) for a perturbation of flat space.
WEAK_FIELD_THRESHOLD = 1e-3


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 299_792_458.0
    # Only documents the scale below which background fields are ignored.
    h_planck: float = 6.626_070_15e-34

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"speed of light must be positive, got {self.c}")


SI = PhysicalConstants()


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("components must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FourVector:
    """Contravariant components (x^0, x^1, x^2, x^3)."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _frozen(self.components, (4,)))

    @classmethod
    def spatial(cls, x: float, y: float, z: float) -> "FourVector":
        return cls((0.0, x, y, z))

    @classmethod
    def in_plane(cls, angle: float) -> "FourVector":
        """Unit spatial vector at ``angle`` in the x-y analyzer plane."""
        return cls((0.0, math.cos(angle), math.sin(angle), 0.0))

    def __array__(self, dtype=None, copy=None):
        return self.components if dtype is None else self.components.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, FourVector):
            return NotImplemented
        return bool(np.array_equal(self.components, other.components))

    def __hash__(self):
        return hash(self.components.tobytes())

    def __repr__(self):
        return f"FourVector({tuple(float(v) for v in self.components)})"


@dataclass(frozen=True, eq=False)
class Metric:
    """Covariant metric components g_mu_nu as a symmetric 4x4 matrix."""

    components: np.ndarray

    def __post_init__(self):
        g = _frozen(self.components, (4, 4))
        if not np.array_equal(g, g.T):
            raise ValueError("metric must be exactly symmetric")
        object.__setattr__(self, "components", g)

    def __array__(self, dtype=None, copy=None):
        return self.components if dtype is None else self.components.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Metric):
            return NotImplemented
        return bool(np.array_equal(self.components, other.components))

    def __hash__(self):
        return hash(self.components.tobytes())

    def perturbation(self) -> np.ndarray:
        """h = g - eta."""
        return self.components - _ETA


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.t, self.x, self.y, self.z)):
            raise DomainError("spacetime point must be finite")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


_ETA = np.diag([1.0, -1.0, -1.0, -1.0])
_ETA.flags.writeable = False


def minkowski_metric() -> Metric:
    return Metric(_ETA)


def perturbed_metric(eta: Metric, h) -> Metric:
    """Return ``eta + h`` after checking that ``h`` is a weak, symmetric field.

    Raises ValueError for an asymmetric ``h`` and DomainError when
    ``max|h| >= WEAK_FIELD_THRESHOLD``.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (4, 4):
        raise ValueError(f"perturbation must be 4x4, got {h.shape}")
    if not np.array_equal(h, h.T):
        raise ValueError("perturbation must be symmetric")
    peak = float(np.max(np.abs(h)))
    if not peak < WEAK_FIELD_THRESHOLD:
        raise DomainError(
            f"max|h| = {peak:g} is outside the weak-field regime "
            f"(threshold {WEAK_FIELD_THRESHOLD:g})"
        )
    return Metric(np.asarray(eta) + h)


def inner_product(g: Metric, a, b) -> float:
    """g_mu_nu a^mu b^nu, exactly symmetric under a <-> b."""
    ab = np.outer(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return 0.5 * float(np.sum(np.asarray(g) * (ab + ab.T)))


def _spatial_norm(v: np.ndarray) -> float:
    # Norm raised and lowered with eta, not g.
    return math.sqrt(abs(float(v @ _ETA @ v)))


def cos_angle(g: Metric, lam, a) -> float:
    """Projection cosine between a hidden-variable direction and an analyzer.

    Both arguments must be spatial (zero time component) and non-zero; in the
    model they lie in the x-y analyzer plane.  The norms are taken as
    sqrt(|v.v|) and the sign is flipped so that flat space gives the
    ordinary Euclidean cosine.  A perturbed metric distorts the result by at
    most 2 max|h| for in-plane vectors.
    """
    lam = np.asarray(lam, dtype=float)
    a = np.asarray(a, dtype=float)
    if lam[0] != 0.0 or a[0] != 0.0:
        raise DomainError("cos_angle needs purely spatial vectors")
    nl = _spatial_norm(lam)
    na = _spatial_norm(a)
    if nl == 0.0 or na == 0.0:
        raise DomainError("cos_angle is undefined for zero-norm vectors")
    return -inner_product(g, lam, a) / (nl * na)


def cos_angle_many(g: Metric, lams: np.ndarray, a) -> np.ndarray:
    """Vectorized :func:`cos_angle` over rows of ``lams`` (shape (n, 4)).

    ``a`` may be one analyzer (shape (4,), result (n,)) or several stacked
    as rows (shape (m, 4), result (n, m)); the row norms are shared.
    """
    lams = np.asarray(lams, dtype=float)
    a = np.asarray(a, dtype=float)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if np.any(lams[:, 0] != 0.0) or np.any(a[:, 0] != 0.0):
        raise DomainError("cos_angle needs purely spatial vectors")
    # eta is diagonal, so |v.v| is a signed sum of squares
    sig = np.diag(_ETA)
    nl = np.sqrt(np.abs((lams * lams) @ sig))
    na = np.sqrt(np.abs((a * a) @ sig))
    if np.any(na == 0.0) or np.any(nl == 0.0):
        raise DomainError("cos_angle is undefined for zero-norm vectors")
    out = -(lams @ (np.asarray(g) @ a.T)) / nl[:, None] / na
    return out[:, 0] if single else out
