"""End-to-end sketch compilation: raw stroke -> models ready for fusion.

One call takes the labeled point cloud a human (real or simulated) produced,
reduces it to a small convex polygon, and attaches the bearing softmax, the
inflated "near" model, and the compass-label tables that the filter, planner,
and responder all share.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .autolabel import LabelTables, build_tables
from .geometry import ConvexPolygon, convex_hull, reduce_hull
from .semantics import (
    DEFAULT_NEAR_AREA_RATIO,
    DEFAULT_STEEPNESS,
    RangeModel,
    SoftmaxModel,
    build_range_model,
    synthesize,
)

DEFAULT_REDUCED_VERTICES = 4
RING_RADIUS_FACTOR = 1.5  # ring sits in the exterior transition zone
RING_SAMPLES = 360


@dataclass(frozen=True)
class SketchRecord:
    """A compiled sketch: geometry plus every model derived from it."""

    label: str
    raw_points: np.ndarray
    polygon: ConvexPolygon  # reduced hull
    delta: float | None  # terrain speed multiplier, None when untagged
    bearing_model: SoftmaxModel
    range_model: RangeModel
    tables: LabelTables

    @property
    def centroid(self):
        return self.polygon.centroid


def compile_sketch(
    label: str,
    points,
    delta: float | None = None,
    reduced_vertices: int = DEFAULT_REDUCED_VERTICES,
    steepness: float = DEFAULT_STEEPNESS,
    near_area_ratio: float = DEFAULT_NEAR_AREA_RATIO,
    ring_samples: int = RING_SAMPLES,
) -> SketchRecord:
    """Hull -> reduction -> softmax -> near model -> label tables."""
    pts = np.asarray(points, dtype=float)
    hull = convex_hull(pts)
    poly = reduce_hull(hull, reduced_vertices)
    bearing = synthesize(poly, steepness)
    rng_model = build_range_model(poly, near_area_ratio, steepness)
    centroid = poly.centroid
    ring_radius = RING_RADIUS_FACTOR * float(
        np.hypot(*(poly.vertices - np.asarray(centroid)).T).mean()
    )
    tables = build_tables(bearing, centroid, ring_radius, ring_samples)
    return SketchRecord(
        label=label,
        raw_points=pts,
        polygon=poly,
        delta=delta,
        bearing_model=bearing,
        range_model=rng_model,
        tables=tables,
    )


def compile_polygon(label: str, poly: ConvexPolygon, delta: float | None = None,
                    **kwargs) -> SketchRecord:
    """Compile a sketch that is already a convex polygon (simulator path)."""
    return compile_sketch(label, poly.vertices, delta=delta, **kwargs)


def stroke_asset_path() -> str:
    """Path to the bundled 661-point rectangular stroke used in tests and demos."""
    return str(resources.files("sketchsearch").joinpath("assets/rect_stroke_661.txt"))
