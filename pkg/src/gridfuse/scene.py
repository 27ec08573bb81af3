"""Synthetic 2D signed-distance scenes on the unit square.

A scene is a union of primitive shapes; its signed distance at a point is
the minimum over the per-shape signed distances (negative inside, positive
outside). All shapes live in [0,1]^2.
"""

from dataclasses import dataclass

import numpy as np


def check_domain(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected 2D points, got shape {np.shape(points)}")
    if np.any(pts < 0.0) or np.any(pts > 1.0):
        raise ValueError("point outside the unit square [0,1]^2")
    return pts


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        cx, cy = self.center
        if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0):
            raise ValueError(f"circle center {self.center} outside the unit square")
        if self.radius <= 0.0:
            raise ValueError("circle radius must be positive")

    def sdf(self, pts: np.ndarray) -> np.ndarray:
        d = pts - np.asarray(self.center)
        return np.hypot(d[:, 0], d[:, 1]) - self.radius


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by min and max corners."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if np.any(lo < 0.0) or np.any(hi > 1.0):
            raise ValueError(f"box corners {self.lo}, {self.hi} outside the unit square")
        if not np.all(lo < hi):
            raise ValueError("box min corner must be strictly below max corner componentwise")

    def sdf(self, pts: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        q = np.abs(pts - center) - half
        outside = np.hypot(np.maximum(q[:, 0], 0.0), np.maximum(q[:, 1], 0.0))
        inside = np.minimum(np.maximum(q[:, 0], q[:, 1]), 0.0)
        return outside + inside


@dataclass(frozen=True)
class Scene:
    shapes: tuple

    def __post_init__(self):
        if len(self.shapes) == 0:
            raise ValueError("scene needs at least one shape")
        object.__setattr__(self, "shapes", tuple(self.shapes))

    def sdf(self, points) -> np.ndarray:
        """Signed distance of the shape union at each point (no domain check)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self.shapes[0].sdf(pts)
        for shape in self.shapes[1:]:
            vals = np.minimum(vals, shape.sdf(pts))
        return vals


def scene_sdf(scene: Scene, point):
    """Domain-checked signed-distance query; scalar in, scalar out."""
    pts = check_domain(point)
    vals = scene.sdf(pts)
    if np.asarray(point).ndim == 1:
        return float(vals[0])
    return vals


def default_scene() -> Scene:
    """One centered circle plus one disjoint box."""
    return Scene(shapes=(
        Circle(center=(0.5, 0.5), radius=0.25),
        Box(lo=(0.72, 0.12), hi=(0.92, 0.32)),
    ))
