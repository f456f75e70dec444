"""
Parametric shape contours and pixel-center rasterization.

A pixel belongs to a mask iff its center lies inside the contour. Contours are
described in a local unit frame (circumradius 1) and placed on the canvas by
center, radius and rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from shapemoe.data.models import ShapeFamily

MIN_SCALE = 0.15
MAX_SCALE = 0.45


@dataclass(frozen=True)
class ShapeSpec:
    """A placed shape: family, canvas center (x, y), circumradius, rotation and contour."""

    family: ShapeFamily
    center_x: float
    center_y: float
    radius: float
    rotation: float
    aspect: float = 1.0
    vertices: tuple[tuple[float, float], ...] = ()


def _unit_vertices(family: ShapeFamily, rng: np.random.Generator) -> tuple[tuple[float, float], ...]:
    if family == ShapeFamily.RECTANGLE:
        aspect = float(rng.uniform(0.4, 1.0))
        norm = math.hypot(1.0, aspect)
        corners = [(1.0, aspect), (-1.0, aspect), (-1.0, -aspect), (1.0, -aspect)]
        return tuple((x / norm, y / norm) for x, y in corners)
    if family == ShapeFamily.TRIANGLE:
        jitter = rng.uniform(-math.pi / 12, math.pi / 12, size=3)
        angles = [math.pi / 2 + 2 * math.pi * k / 3 + float(jitter[k]) for k in range(3)]
        return tuple((math.cos(a), math.sin(a)) for a in angles)
    if family == ShapeFamily.FOUR_POINT_STAR:
        inner = float(rng.uniform(0.30, 0.50))
        points = []
        for k in range(8):
            r = 1.0 if k % 2 == 0 else inner
            a = math.pi * k / 4
            points.append((r * math.cos(a), r * math.sin(a)))
        return tuple(points)
    return ()


def sample_shape(
    family: ShapeFamily,
    rng: np.random.Generator,
    side: int,
    near: ShapeSpec | None = None,
) -> ShapeSpec:
    """
    Draw a random placement of `family` on a side x side canvas.

    The circumradius is half of a scale drawn from 15-45% of the side. With
    `near`, the center is drawn close enough to overlap that shape.
    """
    radius = float(rng.uniform(MIN_SCALE, MAX_SCALE)) * side / 2.0
    if near is None:
        low, high = radius, side - radius
        cx, cy = float(rng.uniform(low, high)), float(rng.uniform(low, high))
    else:
        reach = 0.9 * (near.radius + radius)
        angle = float(rng.uniform(0.0, 2 * math.pi))
        dist = reach * math.sqrt(float(rng.uniform(0.0, 1.0)))
        cx = min(max(near.center_x + dist * math.cos(angle), 0.0), float(side))
        cy = min(max(near.center_y + dist * math.sin(angle), 0.0), float(side))
    rotation = float(rng.uniform(0.0, 2 * math.pi))
    aspect = float(rng.uniform(0.5, 1.0)) if family == ShapeFamily.ELLIPSE else 1.0
    return ShapeSpec(
        family=family,
        center_x=cx,
        center_y=cy,
        radius=radius,
        rotation=rotation,
        aspect=aspect,
        vertices=_unit_vertices(family, rng),
    )


def _inside_polygon(u: np.ndarray, v: np.ndarray, vertices: tuple[tuple[float, float], ...]) -> np.ndarray:
    """Even-odd crossing test, vectorized over points."""
    inside = np.zeros(u.shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        crosses = (y1 > v) != (y2 > v)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (v - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (u < x_at)
    return inside


def rasterize(spec: ShapeSpec, side: int) -> np.ndarray:
    """Boolean (side, side) mask of pixels whose centers fall inside the shape."""
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64) + 0.5
    dx, dy = xs - spec.center_x, ys - spec.center_y
    cos_t, sin_t = math.cos(spec.rotation), math.sin(spec.rotation)
    u = (cos_t * dx + sin_t * dy) / spec.radius
    v = (-sin_t * dx + cos_t * dy) / spec.radius
    if spec.family == ShapeFamily.ELLIPSE:
        return u * u + (v / spec.aspect) ** 2 <= 1.0
    return _inside_polygon(u, v, spec.vertices)
