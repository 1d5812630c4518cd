"""Fixture instances and synthetic generators."""
from typing import Optional

import numpy as np

from weber.config import get_logger
from weber.exceptions import InvalidParameterError
from weber.models import ProblemInstance
from weber.services.gauge import GaugeSet
from weber.services.sets import ConvexRegion

logger = get_logger()

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

FOUR_CIRCLE_CENTERS = np.array([[6.0, 0.0], [-6.0, 0.0], [0.0, 6.0], [0.0, -6.0]])
FOUR_CIRCLE_RADIUS = 2.0
CENTRAL_REGION = ConvexRegion.ball((0.0, 0.0), 3.0)


def triangle(gauge: Optional[GaugeSet] = None, k: int = 2) -> ProblemInstance:
    """Three points (0,0), (1,0), (0,1); optimal value 1 for k=2 under l2."""
    return ProblemInstance(A=TRIANGLE, k=k, gauge=gauge or GaugeSet(), name='triangle')


def unit_square(gauge: Optional[GaugeSet] = None, k: int = 2) -> ProblemInstance:
    """Corners of the unit square in the order (0,0), (1,0), (1,1), (0,1)."""
    return ProblemInstance(A=UNIT_SQUARE, k=k, gauge=gauge or GaugeSet(), name='square')


def four_circles(m: int = 1000, seed: int = 0, gauge: Optional[GaugeSet] = None) -> ProblemInstance:
    """m points spread evenly over four disjoint discs, four centers, one shared disc constraint.

    Points are uniform in area (radius drawn as R*sqrt(U)). Every center must
    lie in the central disc of radius 3, which touches none of the data discs.
    """
    if m < 4:
        raise InvalidParameterError(f"four_circles needs m >= 4, got {m}")
    rng = np.random.default_rng(seed)
    counts = np.full(4, m // 4)
    counts[: m % 4] += 1

    blocks = []
    for center, count in zip(FOUR_CIRCLE_CENTERS, counts):
        radius = FOUR_CIRCLE_RADIUS * np.sqrt(rng.uniform(size=count))
        angle = rng.uniform(0.0, 2.0 * np.pi, size=count)
        blocks.append(center + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]))

    A = np.vstack(blocks)
    logger.debug("four_circles_generated", m=m, seed=seed)
    return ProblemInstance(
        A=A,
        k=4,
        gauge=gauge or GaugeSet(),
        constraints=tuple((CENTRAL_REGION,) for _ in range(4)),
        name='four-circles',
    )
