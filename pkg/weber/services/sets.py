"""Constraint regions: Euclidean balls and boxes.

Provides projection, distance and the penalty support function
phi(x) = 2 sup{<x, w> - ||w||^2/2 | w in region}, evaluated through the
identity phi(x) = ||x||^2 - d(x; region)^2.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from weber.config import get_logger
from weber.exceptions import InvalidInputError, InvalidParameterError

logger = get_logger()

REGION_KINDS = ('ball', 'box')


@dataclass(frozen=True)
class ConvexRegion:
    """A closed convex region: ball(center, radius) or box(lo, hi)."""
    kind: str
    center: Optional[Tuple[float, ...]] = None
    radius: Optional[float] = None
    lo: Optional[Tuple[float, ...]] = None
    hi: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind == 'ball':
            if self.center is None or self.radius is None:
                raise InvalidParameterError("A ball needs a center and a radius")
            center = tuple(float(c) for c in self.center)
            if not np.all(np.isfinite(center)) or not np.isfinite(self.radius) or self.radius <= 0:
                raise InvalidParameterError(f"Invalid ball: center={center}, radius={self.radius}")
            object.__setattr__(self, 'center', center)
            object.__setattr__(self, 'radius', float(self.radius))
        elif self.kind == 'box':
            if self.lo is None or self.hi is None:
                raise InvalidParameterError("A box needs lo and hi corners")
            lo = tuple(float(v) for v in self.lo)
            hi = tuple(float(v) for v in self.hi)
            if len(lo) != len(hi):
                raise InvalidParameterError("Box corners have different dimensions")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise InvalidParameterError("Box corners must be finite")
            if any(a > b for a, b in zip(lo, hi)):
                raise InvalidParameterError(f"Box needs lo <= hi componentwise, got lo={lo}, hi={hi}")
            object.__setattr__(self, 'lo', lo)
            object.__setattr__(self, 'hi', hi)
        else:
            raise InvalidParameterError(f"Unknown region kind: {self.kind}")

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> 'ConvexRegion':
        return cls('ball', center=tuple(center), radius=radius)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> 'ConvexRegion':
        return cls('box', lo=tuple(lo), hi=tuple(hi))

    @classmethod
    def from_literal(cls, literal: str) -> 'ConvexRegion':
        """Parse 'ball c1 .. cn r' or 'box l1 .. ln u1 .. un'.

        Raises:
            InvalidParameterError: On unknown keyword, wrong arity or bad numbers
        """
        tokens = literal.split()
        if not tokens:
            raise InvalidParameterError("Empty region literal")
        keyword, rest = tokens[0].lower(), tokens[1:]
        try:
            values = [float(t) for t in rest]
        except ValueError as e:
            raise InvalidParameterError(f"Non-numeric value in region literal '{literal}'") from e

        if keyword == 'ball':
            if len(values) < 2:
                raise InvalidParameterError(f"Ball literal needs a center and a radius: '{literal}'")
            return cls.ball(values[:-1], values[-1])
        if keyword == 'box':
            if len(values) < 2 or len(values) % 2:
                raise InvalidParameterError(f"Box literal needs 2n numbers: '{literal}'")
            half = len(values) // 2
            return cls.box(values[:half], values[half:])
        raise InvalidParameterError(f"Unknown region keyword '{tokens[0]}' in '{literal}'")

    @property
    def dim(self) -> int:
        return len(self.center) if self.kind == 'ball' else len(self.lo)

    def to_literal(self) -> str:
        if self.kind == 'ball':
            return ' '.join(['ball', *(repr(c) for c in self.center), repr(self.radius)])
        return ' '.join(['box', *(repr(v) for v in self.lo), *(repr(v) for v in self.hi)])


def _as_points(region: ConvexRegion, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != region.dim:
        raise InvalidInputError(f"Point dimension {x.shape[-1]} does not match region dimension {region.dim}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("Point contains non-finite values")
    return x


def region_projection(region: ConvexRegion, x) -> np.ndarray:
    """Nearest point of the region to x (row-wise for stacked input)."""
    x = _as_points(region, x)
    if region.kind == 'box':
        return np.clip(x, region.lo, region.hi)

    c = np.asarray(region.center)
    diff = x - c
    norms = np.linalg.norm(diff, axis=-1, keepdims=True)
    scale = np.where(norms > region.radius, region.radius / np.where(norms > 0, norms, 1.0), 1.0)
    return c + diff * scale


def region_distance(region: ConvexRegion, x) -> np.ndarray:
    """Euclidean distance from x to the region; zero iff x is inside."""
    x = _as_points(region, x)
    dist = np.linalg.norm(x - region_projection(region, x), axis=-1)
    return dist if dist.ndim else float(dist)


def phi_value(region: ConvexRegion, x) -> np.ndarray:
    """Penalty support function phi(x) = ||x||^2 - d(x; region)^2.

    Convex in x; the gradient of phi/2 is region_projection(region, x).
    """
    x = _as_points(region, x)
    value = np.sum(x * x, axis=-1) - np.square(region_distance(region, x))
    return value if np.ndim(value) else float(value)
