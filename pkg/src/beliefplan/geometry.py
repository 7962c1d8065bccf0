"""Planar geometry primitives shared by the samplers, constraints and simulator.

Everything works on numpy arrays so constraint functions can be evaluated on
whole particle sets at once.  Rectangles are axis-aligned; distances are signed
(negative inside).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    return np.mod(np.asarray(a) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x0, y0) .. (x1, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def center(self) -> np.ndarray:
        return np.array([(self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0])

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def shrunk(self, margin: float) -> "Rect":
        return Rect(self.x0 + margin, self.y0 + margin,
                    self.x1 - margin, self.y1 - margin)

    def translated(self, dx: float, dy: float) -> "Rect":
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return ((pts[..., 0] >= self.x0) & (pts[..., 0] <= self.x1)
                & (pts[..., 1] >= self.y0) & (pts[..., 1] <= self.y1))

    def as_list(self):
        return [self.x0, self.y0, self.x1, self.y1]


def rect_signed_distance(pts, rect: Rect) -> np.ndarray:
    """Signed distance from points (..., 2) to a rectangle boundary.

    Positive outside, negative inside.
    """
    pts = np.asarray(pts, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    dx = np.maximum(np.maximum(rect.x0 - x, x - rect.x1), 0.0)
    dy = np.maximum(np.maximum(rect.y0 - y, y - rect.y1), 0.0)
    outside = np.hypot(dx, dy)
    # inside: negative distance to nearest edge
    inside = np.maximum.reduce([rect.x0 - x, x - rect.x1, rect.y0 - y, y - rect.y1])
    return np.where(outside > 0.0, outside, inside)


@lru_cache(maxsize=128)
def _rect_bounds(rects: tuple):
    lo = np.array([[r.x0, r.y0] for r in rects])
    hi = np.array([[r.x1, r.y1] for r in rects])
    return lo, hi


def rects_min_distance(pts, rects) -> np.ndarray:
    """Minimum signed distance from points (..., 2) to a list of rectangles.

    Returns +inf when the list is empty.
    """
    pts = np.asarray(pts, dtype=float)
    if not rects:
        return np.full(pts.shape[:-1], np.inf)
    lo, hi = _rect_bounds(tuple(rects))
    p = pts[..., None, :]
    gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)          # (..., R, 2)
    outside = np.hypot(gap[..., 0], gap[..., 1])
    inside = np.maximum(lo - p, p - hi).max(axis=-1)
    return np.where(outside > 0.0, outside, inside).min(axis=-1)


def bounds_clearance(pts, bounds: Rect) -> np.ndarray:
    """Distance from points to the inside of the workspace boundary.

    Positive when inside the bounds, negative when outside.
    """
    pts = np.asarray(pts, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    return np.minimum.reduce([x - bounds.x0, bounds.x1 - x,
                              y - bounds.y0, bounds.y1 - y])


def region_penetration(pts, rect: Rect, radius: float) -> np.ndarray:
    """How far a disc footprint centered at pts sticks out of a region.

    Zero when the whole footprint lies inside the rectangle.
    """
    d = rect_signed_distance(pts, rect)  # negative inside
    return np.maximum(d + radius, 0.0)


@dataclass(frozen=True)
class Scene:
    """Static workspace geometry.

    ``arm_obstacles`` block the arm links and carried objects;
    ``base_obstacles`` block the mobile base.  ``regions`` are named support
    surfaces (drawers, basin, saucepan, plate, ...).
    """

    bounds: Rect
    arm_obstacles: tuple
    base_obstacles: tuple
    regions: dict

    def region(self, name: str) -> Rect:
        return self.regions[name]
