"""Seeded random polygon generators for test corpora and experiments."""
from __future__ import annotations

import math

import numpy as np

from .geometry import Polygon, GeometryError, triangle_from_angles


def random_simple_polygon(rng: np.random.Generator, n_sides: int, *,
                          avoid_right_angles: bool = True,
                          angle_margin: float = 0.06,
                          max_tries: int = 800) -> Polygon:
    """Star-shaped polygon with n_sides vertices on random rays.

    Rejects shapes with vertex angles near multiples of pi/2 (when asked),
    near-straight vertices, or very sharp corners, so the vertex-expansion
    machinery stays well posed.
    """
    for _ in range(max_tries):
        phi = np.sort(rng.uniform(0, 2 * math.pi, n_sides))
        if np.min(np.diff(np.concatenate([phi, [phi[0] + 2 * math.pi]]))) < 2 * math.pi / (4 * n_sides):
            continue
        r = rng.uniform(0.75, 1.25, n_sides)
        verts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        try:
            P = Polygon(verts)
        except GeometryError:
            continue
        ang = P.angles
        if np.any(ang < 0.35) or np.any(np.abs(ang - math.pi) < 0.08):
            continue
        if avoid_right_angles and np.any(
                np.min(np.abs(ang[:, None] - np.array([[math.pi / 2, 3 * math.pi / 2]])), axis=1)
                < angle_margin):
            continue
        return P
    raise RuntimeError(f"no valid {n_sides}-gon found in {max_tries} tries")


def random_triangle(rng: np.random.Generator, *, min_angle: float = 0.12,
                    max_tries: int = 400) -> Polygon:
    for _ in range(max_tries):
        verts = rng.uniform(-1, 1, (3, 2))
        try:
            T = Polygon(verts)
        except GeometryError:
            continue
        if T.angles.min() >= min_angle:
            return T
    raise RuntimeError("no valid triangle found")


def random_obtuse_triangle(rng: np.random.Generator, *,
                           obtuse_range=(1.66, 2.6), min_acute: float = 0.26) -> Polygon:
    """Obtuse triangle with the obtuse angle in the given range (radians)."""
    while True:
        gamma = rng.uniform(*obtuse_range)
        rest = math.pi - gamma
        alpha = rng.uniform(min_acute, rest - min_acute)
        beta = rest - alpha
        if min(alpha, beta) < min_acute:
            continue
        # place the obtuse vertex opposite the base
        return triangle_from_angles(alpha, beta)
