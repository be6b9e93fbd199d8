"""Exact radius queries over points and axis-aligned rectangles.

Indices are immutable after construction and answer closed-ball queries
(distance <= radius).  Point indices are rebuilt every game step because
unit positions move; rectangle indices are built once per episode.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateId, InvariantViolation


class PointIndex:
    __slots__ = ("ids", "xs", "ys")

    def __init__(self, ids: np.ndarray, xs: np.ndarray, ys: np.ndarray):
        self.ids = ids
        self.xs = xs
        self.ys = ys

    def __len__(self) -> int:
        return len(self.ids)


class RectIndex:
    __slots__ = ("ids", "xmin", "ymin", "xmax", "ymax")

    def __init__(self, ids, xmin, ymin, xmax, ymax):
        self.ids = ids
        self.xmin = xmin
        self.ymin = ymin
        self.xmax = xmax
        self.ymax = ymax

    def __len__(self) -> int:
        return len(self.ids)


def build_point_index(points: Iterable[tuple[int, float, float]]) -> PointIndex:
    entries = sorted(points)
    ids = np.fromiter((e[0] for e in entries), dtype=np.int64, count=len(entries))
    if len(np.unique(ids)) != len(ids):
        raise DuplicateId("point ids must be unique")
    xs = np.fromiter((e[1] for e in entries), dtype=np.float64, count=len(entries))
    ys = np.fromiter((e[2] for e in entries), dtype=np.float64, count=len(entries))
    if len(xs) and not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise InvariantViolation("point coordinates must be finite")
    return PointIndex(ids, xs, ys)


def query_points(index: PointIndex, center: Sequence[float], radius: float) -> np.ndarray:
    """Ids of points with euclidean distance <= radius, in ascending order."""
    if radius < 0:
        raise InvariantViolation("radius must be >= 0")
    if len(index) == 0:
        return index.ids
    dx = index.xs - center[0]
    dy = index.ys - center[1]
    return index.ids[dx * dx + dy * dy <= radius * radius]


def build_rect_index(rects: Iterable[tuple[int, float, float, float, float]]) -> RectIndex:
    entries = sorted(rects)
    ids = np.fromiter((e[0] for e in entries), dtype=np.int64, count=len(entries))
    if len(np.unique(ids)) != len(ids):
        raise DuplicateId("rect ids must be unique")
    xmin = np.fromiter((e[1] for e in entries), dtype=np.float64, count=len(entries))
    ymin = np.fromiter((e[2] for e in entries), dtype=np.float64, count=len(entries))
    xmax = np.fromiter((e[3] for e in entries), dtype=np.float64, count=len(entries))
    ymax = np.fromiter((e[4] for e in entries), dtype=np.float64, count=len(entries))
    if len(ids) and ((xmin > xmax).any() or (ymin > ymax).any()):
        raise InvariantViolation("rectangle bounds require xmin <= xmax and ymin <= ymax")
    return RectIndex(ids, xmin, ymin, xmax, ymax)


def query_rects(index: RectIndex, center: Sequence[float], radius: float) -> np.ndarray:
    """Ids of rectangles whose minimum distance to center is <= radius."""
    if radius < 0:
        raise InvariantViolation("radius must be >= 0")
    if len(index) == 0:
        return index.ids
    dx = np.maximum(np.maximum(index.xmin - center[0], center[0] - index.xmax), 0.0)
    dy = np.maximum(np.maximum(index.ymin - center[1], center[1] - index.ymax), 0.0)
    return index.ids[dx * dx + dy * dy <= radius * radius]


def point_rect_distance(px: float, py: float,
                        xmin: float, ymin: float, xmax: float, ymax: float) -> float:
    dx = max(xmin - px, px - xmax, 0.0)
    dy = max(ymin - py, py - ymax, 0.0)
    return math.hypot(dx, dy)
