"""Minkowski gauges of scaled norm balls and projections onto their polars.

Every operation works on a single vector or on a stack of vectors along the
last axis, so the objective service can evaluate all center/point
differences in one call.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from weber.config import get_logger
from weber.exceptions import InvalidInputError, InvalidParameterError

logger = get_logger()

GAUGE_KINDS = ('euclidean-ball', 'l1-ball', 'linf-ball')

# Short names accepted by the CLI and the HTTP API
GAUGE_ALIASES = {
    'l2': 'euclidean-ball',
    'euclidean': 'euclidean-ball',
    'l1': 'l1-ball',
    'linf': 'linf-ball',
}

# kind of F -> kind of the polar F°
POLAR_KIND = {
    'euclidean-ball': 'euclidean-ball',
    'l1-ball': 'linf-ball',
    'linf-ball': 'l1-ball',
}


@dataclass(frozen=True)
class GaugeSet:
    """The set F = radius * (unit ball of the named norm)."""
    kind: str = 'euclidean-ball'
    radius: float = 1.0

    def __post_init__(self):
        kind = GAUGE_ALIASES.get(self.kind, self.kind)
        if kind not in GAUGE_KINDS:
            raise InvalidParameterError(f"Unknown gauge kind: {self.kind}")
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise InvalidParameterError(f"Gauge radius must be positive, got {self.radius}")
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'radius', float(self.radius))

    @property
    def polar(self) -> 'GaugeSet':
        """The polar set F°, itself a scaled norm ball."""
        return GaugeSet(POLAR_KIND[self.kind], 1.0 / self.radius)


def _as_finite(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("Gauge input contains non-finite values")
    return x


def _norm(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == 'euclidean-ball':
        return np.linalg.norm(x, axis=-1)
    if kind == 'l1-ball':
        return np.abs(x).sum(axis=-1)
    return np.abs(x).max(axis=-1)


def gauge_value(F: GaugeSet, x) -> np.ndarray:
    """Minkowski function rho_F(x) = inf{t >= 0 | x in tF}.

    Args:
        F: The gauge set
        x: Vector of length n or array (..., n)

    Returns:
        Nonnegative scalar (or array over the leading axes)

    Raises:
        InvalidInputError: If x has non-finite entries
    """
    x = _as_finite(x)
    value = _norm(F.kind, x) / F.radius
    return value if value.ndim else float(value)


def gauge_subgradient(F: GaugeSet, x) -> np.ndarray:
    """An element of the subdifferential of rho_F at x.

    Tie rules: the l1 gauge emits 0 in zero coordinates; the linf gauge puts
    full weight on the smallest-index maximal coordinate. Zero input gives
    the zero vector.
    """
    x = _as_finite(x)
    if F.kind == 'euclidean-ball':
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        safe = np.where(norms > 0, norms, 1.0)
        g = np.where(norms > 0, x / safe, 0.0)
    elif F.kind == 'l1-ball':
        g = np.sign(x)
    else:
        absx = np.abs(x)
        idx = np.argmax(absx, axis=-1)
        g = np.zeros_like(x)
        picked = np.take_along_axis(x, idx[..., None], axis=-1)
        np.put_along_axis(g, idx[..., None], np.sign(picked), axis=-1)
    return g / F.radius


def _project_l1_ball(y: np.ndarray, radius: float) -> np.ndarray:
    """Row-wise Euclidean projection onto {z : ||z||_1 <= radius}.

    Sort-based simplex projection applied to |y|, signs restored afterwards.
    """
    flat = y.reshape(-1, y.shape[-1])
    absy = np.abs(flat)
    inside = absy.sum(axis=1) <= radius

    u = -np.sort(-absy, axis=1)
    css = np.cumsum(u, axis=1) - radius
    ind = np.arange(1, flat.shape[1] + 1)
    cond = u - css / ind > 0
    # last index where the condition holds; at least the first entry qualifies outside the ball
    rho = flat.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(flat.shape[0]), rho] / (rho + 1)
    theta = np.where(inside, 0.0, np.maximum(theta, 0.0))

    projected = np.sign(flat) * np.maximum(absy - theta[:, None], 0.0)
    projected = np.where(inside[:, None], flat, projected)
    return projected.reshape(y.shape)


def _project_ball(kind: str, radius: float, y: np.ndarray) -> np.ndarray:
    if kind == 'euclidean-ball':
        norms = np.linalg.norm(y, axis=-1, keepdims=True)
        scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
        return y * scale
    if kind == 'linf-ball':
        return np.clip(y, -radius, radius)
    return _project_l1_ball(y, radius)


def polar_projection(F: GaugeSet, y) -> np.ndarray:
    """Euclidean projection of y onto the polar set F°."""
    y = _as_finite(y)
    polar = F.polar
    return _project_ball(polar.kind, polar.radius, y)


def polar_distance(F: GaugeSet, y) -> np.ndarray:
    """Euclidean distance from y to F°; zero iff y lies in F°."""
    y = _as_finite(y)
    dist = np.linalg.norm(y - polar_projection(F, y), axis=-1)
    return dist if dist.ndim else float(dist)


def set_norms(F: GaugeSet, n: int) -> Tuple[float, float]:
    """Closed-form (||F||, ||F°||) in dimension n, the Euclidean sup norms."""
    if n < 1:
        raise InvalidParameterError(f"Dimension must be positive, got {n}")
    r = F.radius
    if F.kind == 'euclidean-ball':
        return r, 1.0 / r
    if F.kind == 'l1-ball':
        return r, float(np.sqrt(n)) / r
    return r * float(np.sqrt(n)), 1.0 / r


def smoothed_gauge_value(F: GaugeSet, z, mu: float) -> np.ndarray:
    """Nesterov smoothing (1/2mu)||z||^2 - (mu/2) d(z/mu; F°)^2 of rho_F."""
    if mu <= 0:
        raise InvalidParameterError(f"Smoothing parameter must be positive, got {mu}")
    z = _as_finite(z)
    sq = np.sum(z * z, axis=-1)
    dist = polar_distance(F, z / mu)
    value = sq / (2.0 * mu) - 0.5 * mu * np.square(dist)
    return value if np.ndim(value) else float(value)
