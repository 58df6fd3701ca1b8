"""Convex-polygon machinery for sketch processing.

Free-form strokes arrive as raw point clouds; everything downstream works on
small strictly-convex polygons, so this module provides hull construction,
deflection-angle hull reduction, and the point/polygon predicates shared by
the observation-model and terrain code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError


class DegenerateInput(ValueError):
    """Raised when point sets or segments are too degenerate to process."""


class Point2(NamedTuple):
    x: float
    y: float


def _as_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (N, 2) point array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, vertices in counter-clockwise order.

    `vertices` is an (M, 2) float array, M >= 3. No three consecutive
    vertices are collinear and the signed area is positive.
    """

    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        verts = _as_array(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise DegenerateInput("polygon needs at least 3 vertices")
        if self.signed_area() <= 0:
            raise DegenerateInput("vertices must wind counter-clockwise")

    def __len__(self) -> int:
        return len(self.vertices)

    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def area(self) -> float:
        return self.signed_area()

    @property
    def centroid(self) -> Point2:
        """Area centroid (shoelace formula)."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
        area = 0.5 * cross.sum()
        cx = ((v[:, 0] + nxt[:, 0]) * cross).sum() / (6.0 * area)
        cy = ((v[:, 1] + nxt[:, 1]) * cross).sum() / (6.0 * area)
        return Point2(float(cx), float(cy))

    def points(self) -> list[Point2]:
        return [Point2(float(x), float(y)) for x, y in self.vertices]


def convex_hull(points) -> ConvexPolygon:
    """Convex hull of a 2-D point set (Quickhull), vertices CCW.

    Output vertices are a subset of the input points. Raises DegenerateInput
    for fewer than 3 distinct points or an all-collinear set.
    """
    pts = _as_array(points)
    if len(np.unique(pts, axis=0)) < 3:
        raise DegenerateInput("need at least 3 distinct points")
    try:
        hull = ConvexHull(pts)
    except QhullError as err:
        raise DegenerateInput(f"degenerate point set: {err}") from None
    verts = pts[hull.vertices]  # qhull returns 2-D hull vertices in CCW order
    return ConvexPolygon(_drop_collinear(verts))


def _drop_collinear(verts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Remove middle vertices of collinear consecutive triples (CCW input)."""
    keep = []
    n = len(verts)
    for i in range(n):
        a, b, c = verts[i - 1], verts[i], verts[(i + 1) % n]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        scale = max(1.0, abs(b[0] - a[0]), abs(b[1] - a[1]), abs(c[0] - b[0]), abs(c[1] - b[1]))
        if abs(cross) > tol * scale * scale:
            keep.append(i)
    if len(keep) < 3:
        raise DegenerateInput("all points collinear")
    return verts[keep]


def deflection_angle(prev, v, next_) -> float:
    """Turn angle at vertex v between segments prev->v and v->next, in [0, pi].

    arccos of the normalized dot product of the two segment vectors; the
    argument is clamped to [-1, 1] so near-collinear input cannot raise.
    """
    a = np.asarray(v, dtype=float) - np.asarray(prev, dtype=float)
    b = np.asarray(next_, dtype=float) - np.asarray(v, dtype=float)
    na, nb = np.hypot(*a), np.hypot(*b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInput("zero-length segment in deflection angle")
    cosang = float(np.dot(a, b) / (na * nb))
    return math.acos(min(1.0, max(-1.0, cosang)))


def reduce_hull(hull: ConvexPolygon, n: int) -> ConvexPolygon:
    """Shrink a hull to exactly n vertices by repeated minimal-deflection removal.

    Each round removes the vertex whose deflection angle is smallest (ties:
    lowest index in CCW order), then recomputes. Hulls already at or below n
    vertices are returned unchanged. Output vertices are a subset of the
    input's and stay strictly convex.
    """
    if n < 3:
        raise ValueError("target vertex count must be >= 3")
    verts = hull.vertices
    while len(verts) > n:
        m = len(verts)
        angles = np.array([
            deflection_angle(verts[i - 1], verts[i], verts[(i + 1) % m])
            for i in range(m)
        ])
        # ties (within rounding noise) resolve to the lowest CCW index
        drop = int(np.flatnonzero(angles <= angles.min() + 1e-9)[0])
        verts = np.delete(verts, drop, axis=0)
        verts = _drop_collinear(verts)
    return ConvexPolygon(verts)


def contains(poly: ConvexPolygon, p, tol: float = 1e-9) -> bool:
    """True iff p lies inside the polygon or on its boundary."""
    px, py = float(p[0]), float(p[1])
    v = poly.vertices
    nxt = np.roll(v, -1, axis=0)
    cross = (nxt[:, 0] - v[:, 0]) * (py - v[:, 1]) - (nxt[:, 1] - v[:, 1]) * (px - v[:, 0])
    scale = max(1.0, float(np.abs(v).max()))
    return bool((cross >= -tol * scale).all())


def contains_many(poly: ConvexPolygon, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorized `contains` over an (N, 2) array; returns a boolean mask."""
    pts = _as_array(points)
    v = poly.vertices
    nxt = np.roll(v, -1, axis=0)
    ex = (nxt[:, 0] - v[:, 0])[None, :]
    ey = (nxt[:, 1] - v[:, 1])[None, :]
    rx = pts[:, 0:1] - v[None, :, 0]
    ry = pts[:, 1:2] - v[None, :, 1]
    cross = ex * ry - ey * rx
    scale = max(1.0, float(np.abs(v).max()))
    return (cross >= -tol * scale).all(axis=1)


def load_points(path) -> np.ndarray:
    """Read an 'x y' per line point file; '#' starts a comment."""
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            x, y = line.split()
            pts.append((float(x), float(y)))
    if not pts:
        raise DegenerateInput(f"no points in {path}")
    return np.asarray(pts, dtype=float)


def save_points(path, points: Iterable[Sequence[float]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in points:
            fh.write(f"{p[0]:.6f} {p[1]:.6f}\n")
