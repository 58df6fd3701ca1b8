"""Softmax observation models synthesized from convex polygons.

A reduced M-vertex polygon becomes an (M+1)-class linear softmax: one
interior class (the zero reference) plus one exterior class per edge whose
weight is the edge's outward normal scaled by a steepness factor. Class
boundaries then coincide with the polygon's edges. A companion "near" model
is the same construction on an area-inflated copy of the polygon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexPolygon, DegenerateInput, Point2

INTERIOR = "interior"
EXTERIOR = "exterior"

DEFAULT_STEEPNESS = 5.0  # 1/m; transition band well under 10 m at map scale
DEFAULT_NEAR_AREA_RATIO = 3.0


@dataclass(frozen=True)
class SoftmaxModel:
    """Linear softmax over 2-D states: p(c|s) ∝ exp(w_c . s + b_c).

    Class 0 is the interior reference class (zero weight and bias); class
    k >= 1 sits beyond polygon edge k-1. `roles` mirrors that layout.
    """

    weights: np.ndarray = field(repr=False)  # (K, 2)
    biases: np.ndarray = field(repr=False)  # (K,)
    roles: tuple = ()

    @property
    def n_classes(self) -> int:
        return len(self.biases)

    def logits(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.weights.T + self.biases

    def probabilities(self, points) -> np.ndarray:
        """Class probabilities for an (N, 2) array of states, shape (N, K).

        Max-subtracted before exponentiation, so coordinates up to 1e4 m
        with steep weights stay finite.
        """
        z = self.logits(points)
        z -= z.max(axis=1, keepdims=True)
        # floor keeps dominated classes strictly positive (fusion never zeros
        # a particle outright) without disturbing normalization at 1e-9
        e = np.maximum(np.exp(z), 1e-300)
        return e / e.sum(axis=1, keepdims=True)

    def interior_probability(self, points) -> np.ndarray:
        return self.probabilities(points)[:, 0]


def class_probability(model: SoftmaxModel, s) -> np.ndarray:
    """Distribution over classes at a single state, shape (K,)."""
    return model.probabilities(np.asarray(s, dtype=float).reshape(1, 2))[0]


def synthesize(poly: ConvexPolygon, steepness: float = DEFAULT_STEEPNESS) -> SoftmaxModel:
    """Build the (M+1)-class softmax whose class boundaries are the polygon edges.

    Exterior class k gets weight steepness * n_k (outward unit normal of edge
    k) and a bias placing the interior/exterior decision boundary exactly on
    the edge line.
    """
    if steepness <= 0:
        raise ValueError("steepness must be positive")
    v = poly.vertices
    nxt = np.roll(v, -1, axis=0)
    edges = nxt - v
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    if np.any(lengths == 0.0):
        raise DegenerateInput("polygon has a zero-length edge")
    # CCW winding: outward normal of edge (dx, dy) is (dy, -dx)
    normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    weights = np.vstack([np.zeros((1, 2)), steepness * normals])
    biases = np.concatenate([[0.0], -steepness * np.einsum("ij,ij->i", normals, v)])
    roles = (INTERIOR,) + tuple((EXTERIOR, k) for k in range(len(v)))
    return SoftmaxModel(weights=weights, biases=biases, roles=roles)


def inflate(poly: ConvexPolygon, h: float) -> ConvexPolygon:
    """Scale the polygon about its centroid so the area grows by factor h."""
    if h < 1.0:
        raise ValueError("area ratio must be >= 1")
    c = np.asarray(poly.centroid)
    return ConvexPolygon(c + np.sqrt(h) * (poly.vertices - c))


@dataclass(frozen=True)
class RangeModel:
    """'Near' membership model: interior class of an inflated copy of the sketch."""

    near_polygon: ConvexPolygon
    near_softmax: SoftmaxModel

    def near_probability(self, points) -> np.ndarray:
        return self.near_softmax.interior_probability(points)


def build_range_model(
    poly: ConvexPolygon,
    area_ratio: float = DEFAULT_NEAR_AREA_RATIO,
    steepness: float = DEFAULT_STEEPNESS,
) -> RangeModel:
    near_poly = inflate(poly, area_ratio)
    return RangeModel(near_polygon=near_poly, near_softmax=synthesize(near_poly, steepness))


def range_bearing_likelihood(
    range_model: RangeModel,
    bearing: SoftmaxModel,
    s,
    wants_near: bool,
    bearing_class: int,
) -> float:
    """p(near-ness, bearing class | s) under range/bearing independence.

    The not-near case uses the exact complement 1 - p(Near|s); "far" is not a
    separate class.
    """
    s = np.asarray(s, dtype=float).reshape(1, 2)
    p_near = float(range_model.near_probability(s)[0])
    p_bearing = float(bearing.probabilities(s)[0, bearing_class])
    return (p_near if wants_near else 1.0 - p_near) * p_bearing


def dump_model(model: SoftmaxModel) -> str:
    """Plain-text rows 'role wx wy b', one class per line (golden-file format)."""
    lines = []
    for role, w, b in zip(model.roles, model.weights, model.biases):
        name = role if isinstance(role, str) else f"{role[0]}{role[1]}"
        lines.append(f"{name} {w[0]:.9g} {w[1]:.9g} {b:.9g}")
    return "\n".join(lines) + "\n"
