"""Disc and workspace predicates.

All objects are discs of one radius ``r``. Two discs collide when their
centres are closer than ``2r``; tangency is not a collision. The conflict
disc ``D(p)`` of a pose is the open disc of radius ``2r`` around it, so a
query point lies in ``D(p)`` exactly when a disc there would collide with
a disc at ``p``.
"""
import logging
from typing import Hashable, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from rearrangeflow.errors import PositionOutOfBounds

logger = logging.getLogger(__name__)


class Position(NamedTuple):
    x: float
    y: float


class Workspace(NamedTuple):
    width: float
    height: float

    def inset_bounds(self, radius: float) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the rectangle available to disc centres"""
        return radius, radius, self.width - radius, self.height - radius

    def admits(self, radius: float) -> bool:
        return self.width > 0 and self.height > 0 and self.width > 2 * radius and self.height > 2 * radius

    def contains(self, p: Sequence[float], radius: float) -> bool:
        xmin, ymin, xmax, ymax = self.inset_bounds(radius)
        return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

    def require(self, p: Sequence[float], radius: float, what: str = 'position'):
        if not self.contains(p, radius):
            raise PositionOutOfBounds(
                f"{what} ({p[0]:.6g}, {p[1]:.6g}) outside configuration rectangle "
                f"[{radius:.6g}, {self.width - radius:.6g}] x [{radius:.6g}, {self.height - radius:.6g}]")


def _squared_distance(p: Sequence[float], q: Sequence[float]) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy


def discs_collide(p: Sequence[float], q: Sequence[float], r: float) -> bool:
    """True iff discs of radius r at p and q overlap with nonempty interior"""
    return _squared_distance(p, q) < 4.0 * r * r


def conflict_disc_contains(center: Sequence[float], query: Sequence[float], r: float) -> bool:
    return discs_collide(center, query, r)


def conflict_mask(xs: np.ndarray, ys: np.ndarray, center: Sequence[float], r: float) -> np.ndarray:
    """Vectorized D(center) membership for broadcastable coordinate arrays"""
    dx = xs - center[0]
    dy = ys - center[1]
    return dx * dx + dy * dy < 4.0 * r * r


def arrangement_feasible(arrangement: Sequence[Sequence[float]], r: float,
                         workspace: Optional[Workspace] = None) -> bool:
    """True iff no two discs of the arrangement collide.

    When a workspace is given every centre is also checked against the
    inset rectangle.
    """
    if workspace is not None:
        for i, p in enumerate(arrangement):
            workspace.require(p, r, what=f"object {i}")
    if len(arrangement) < 2:
        return True
    distances = pdist(np.asarray(arrangement, dtype=float), 'sqeuclidean')
    return bool(np.all(distances >= 4.0 * r * r))


def colliding_pairs(arrangement: Sequence[Sequence[float]], r: float) -> List[Tuple[int, int]]:
    pairs = []
    for i in range(len(arrangement)):
        for j in range(i + 1, len(arrangement)):
            if discs_collide(arrangement[i], arrangement[j], r):
                pairs.append((i, j))
    return pairs


def interference_set(query: Sequence[float], poses: Iterable[Tuple[Hashable, Sequence[float]]],
                     r: float) -> Set[Hashable]:
    """Labels whose pose collides with a disc placed at ``query``"""
    return {label for label, position in poses if discs_collide(query, position, r)}


# Float slack for exact sweep checks; a swept disc may not come closer than 2r - SWEEP_TOLERANCE
SWEEP_TOLERANCE = 1e-9


def polyline_min_distance(polyline: Sequence[Sequence[float]], points: Sequence[Sequence[float]]) -> float:
    """Smallest exact distance from any point of the polyline to any of ``points``"""
    vertices = np.asarray(polyline, dtype=float).reshape(-1, 2)
    others = np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(vertices) or not len(others):
        return float('inf')
    if len(vertices) == 1:
        return float(np.sqrt(np.min(np.sum((others - vertices[0]) ** 2, axis=1))))

    starts = vertices[:-1]
    steps = vertices[1:] - starts
    lengths = np.einsum('mc,mc->m', steps, steps)
    offsets = others[None, :, :] - starts[:, None, :]
    with np.errstate(invalid='ignore', divide='ignore'):
        t = np.einsum('mkc,mc->mk', offsets, steps) / lengths[:, None]
    t = np.clip(np.nan_to_num(t, nan=0.0), 0.0, 1.0)
    gaps = offsets - t[..., None] * steps[:, None, :]
    return float(np.sqrt(np.min(np.einsum('mkc,mkc->mk', gaps, gaps))))


def sweep_clear(polyline: Sequence[Sequence[float]], obstacles: Sequence[Sequence[float]], r: float,
                tolerance: float = SWEEP_TOLERANCE) -> bool:
    """True iff a disc moved along the polyline never overlaps a disc resting at ``obstacles``"""
    return polyline_min_distance(polyline, obstacles) >= 2.0 * r - tolerance
