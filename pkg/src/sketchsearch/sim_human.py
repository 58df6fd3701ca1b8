"""Simulated human teammate: parameterized sketches plus stochastic replies.

Sketch polygons are drawn from a five-parameter family (centroid, mean vertex
radius, radius spread, extra-vertex Poisson mean, angular jitter). Replies
are corrupted by a fixed accuracy eta (truthful mass scaled, remainder spread
over the wrong answers) and availability xi (probability of answering at
all), which lets batch experiments cover the space of collaborator quality
without live subjects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autolabel import COMPASS_LABELS, label_distribution
from .geometry import ConvexPolygon, DegenerateInput, contains, convex_hull
from .queries import (
    ANSWER_NO,
    ANSWER_NULL,
    ANSWER_YES,
    INSIDE,
    NEAR,
    Query,
    Statement,
    query_truth_likelihood,
)

MODE_ACTIVE = "active"
MODE_PASSIVE = "passive"
MODE_BOTH = "both"

TERRAIN_CHOICES = (0.5, 1.0, 1.5)  # slow / neutral / fast radio options


@dataclass(frozen=True)
class SketchParams:
    centroid: tuple[float, float] = (500.0, 500.0)
    mean_radius: float = 120.0  # r
    radius_sd: float = 12.0  # sigma
    extra_vertex_mean: float = 2.0  # lambda, vertices ~ 3 + Poisson(lambda)
    angle_sd: float = 0.25  # psi, radians

    def __post_init__(self):
        if self.mean_radius <= 0 or self.radius_sd < 0 or \
                self.extra_vertex_mean < 0 or self.angle_sd < 0:
            raise ValueError("invalid sketch parameters")


@dataclass(frozen=True)
class HumanModel:
    eta: float = 0.95  # accuracy
    xi: float = 0.9  # availability
    sketch_period: float | None = 60.0  # seconds; None means never sketches
    mode: str = MODE_ACTIVE
    push_period: float | None = None  # passive statement rate, None = off

    def __post_init__(self):
        if not (0.0 <= self.eta <= 1.0 and 0.0 <= self.xi <= 1.0):
            raise ValueError("eta and xi must lie in [0, 1]")
        if self.sketch_period is not None and self.sketch_period <= 0:
            raise ValueError("sketch period must be positive or None")
        if self.mode not in (MODE_ACTIVE, MODE_PASSIVE, MODE_BOTH):
            raise ValueError(f"unknown interaction mode {self.mode!r}")


def sample_sketch_polygon(params: SketchParams, rng: np.random.Generator) -> ConvexPolygon:
    """Draw one sketch polygon from the parameterized family.

    Vertex count is 3 + Poisson(lambda); radii are Gaussian around the mean
    radius (truncated positive); angular gaps are Gaussian around the regular
    spacing and renormalized to close the full circle. The raw ring is passed
    through the hull so the result is always strictly convex; a pathological
    draw falls back to the regular polygon after ten attempts.
    """
    n_v = 3 + int(rng.poisson(params.extra_vertex_mean))
    cx, cy = params.centroid
    for _ in range(10):
        mags = np.maximum(rng.normal(params.mean_radius, params.radius_sd, n_v), 1e-6)
        gaps = rng.normal(2 * math.pi / n_v, params.angle_sd, n_v)
        total = gaps.sum()
        if total <= 0:
            continue
        gaps = gaps * (2 * math.pi / total)
        thetas = gaps[0] + np.concatenate([[0.0], np.cumsum(gaps[:-1])])
        pts = np.column_stack([cx + mags * np.cos(thetas), cy + mags * np.sin(thetas)])
        try:
            return convex_hull(pts)
        except DegenerateInput:
            continue
    thetas = 2 * math.pi * np.arange(n_v) / n_v
    return ConvexPolygon(np.column_stack([cx + params.mean_radius * np.cos(thetas),
                                          cy + params.mean_radius * np.sin(thetas)]))


def corrupt_likelihood(p: np.ndarray, eta: float) -> np.ndarray:
    """Accuracy-corrupted answer distribution.

    Mass eta*p(j) stays truthful; the removed (1-eta)*p(j) is spread
    uniformly over the other answers. Output is a valid distribution for any
    valid input.
    """
    p = np.asarray(p, dtype=float)
    if len(p) < 2:
        return p.copy()
    out = eta * p + (1.0 - eta) * (1.0 - p) / (len(p) - 1)
    return out / out.sum()


def answer_query(true_target_pos, true_mode: int, query: Query, human: HumanModel,
                 codebook, rng: np.random.Generator) -> str:
    """Sample the human's reply: Null with probability 1 - xi, otherwise the
    eta-corrupted truthful answer at the true target state."""
    if rng.random() >= human.xi:
        return ANSWER_NULL
    pos = np.asarray(true_target_pos, dtype=float).reshape(1, 2)
    modes = np.array([true_mode], dtype=np.int8)
    p_yes = float(query_truth_likelihood(query, pos, modes, codebook)[0])
    dist = corrupt_likelihood(np.array([p_yes, 1.0 - p_yes]), human.eta)
    return ANSWER_YES if rng.random() < dist[0] else ANSWER_NO


def statement_relation_distribution(sketch, s) -> tuple[list[str], np.ndarray]:
    """Relation mix a truthful human would use for target s and one sketch:
    Inside when it applies, Near by its own likelihood, bearings otherwise."""
    s = np.asarray(s, dtype=float)
    p_near = float(sketch.range_model.near_probability(s.reshape(1, 2))[0])
    weights = [1.0 if contains(sketch.polygon, s) else 0.0, p_near]
    relations = [INSIDE, NEAR]
    bearing = (1.0 - p_near) * label_distribution(sketch, s)
    relations.extend(COMPASS_LABELS)
    weights.extend(bearing.tolist())
    w = np.asarray(weights)
    return relations, w / w.sum()


def volunteer_statement(true_target_pos, codebook, human: HumanModel,
                        rng: np.random.Generator) -> Statement | None:
    """Pushed statement about the registered sketch nearest the target;
    inaccuracy flips the is/is-not polarity."""
    if not codebook.sketches:
        return None
    s = np.asarray(true_target_pos, dtype=float)
    nearest = min(codebook.sketches.values(),
                  key=lambda sk: float(np.hypot(*(np.asarray(sk.centroid) - s))))
    relations, dist = statement_relation_distribution(nearest, s)
    rel = relations[int(rng.choice(len(relations), p=dist))]
    positive = rng.random() < human.eta
    return Statement(positive=positive, relation=rel, label=nearest.label)


@dataclass(frozen=True)
class SketchRequest:
    label: str
    points: np.ndarray
    delta: float | None


class SimulatedHuman:
    """Schedules sketches/statements and answers queries for one episode.

    Consumes one dedicated random stream; an episode in which this human
    never acts draws nothing from it, so a never-sketching active human is
    bit-identical to running with no human at all.
    """

    def __init__(self, model: HumanModel, sketch_params: SketchParams,
                 landmarks, terrain_lookup, rng: np.random.Generator):
        self.model = model
        self.sketch_params = sketch_params
        self.landmarks = list(landmarks)
        self.terrain_lookup = terrain_lookup  # callable (x, y) -> true alpha
        self.rng = rng
        self.sketched: set[str] = set()
        self.last_glimpse: np.ndarray | None = None

    def observe_glimpse(self, pos) -> None:
        self.last_glimpse = np.asarray(pos, dtype=float)

    def _target_reference(self, true_target_pos) -> np.ndarray:
        if self.last_glimpse is not None:
            return self.last_glimpse
        return np.asarray(true_target_pos, dtype=float)

    def maybe_sketch(self, t: float, true_target_pos) -> SketchRequest | None:
        period = self.model.sketch_period
        if period is None or not math.isfinite(period):
            return None
        if t <= 0 or (int(t) % int(period)) != 0:
            return None
        remaining = [lm for lm in self.landmarks if lm[0] not in self.sketched]
        if not remaining:
            return None
        ref = self._target_reference(true_target_pos)
        name, (lx, ly) = min(remaining,
                             key=lambda lm: (lm[1][0] - ref[0]) ** 2 + (lm[1][1] - ref[1]) ** 2)
        self.sketched.add(name)
        params = SketchParams(centroid=(lx, ly),
                              mean_radius=self.sketch_params.mean_radius,
                              radius_sd=self.sketch_params.radius_sd,
                              extra_vertex_mean=self.sketch_params.extra_vertex_mean,
                              angle_sd=self.sketch_params.angle_sd)
        poly = sample_sketch_polygon(params, self.rng)
        true_alpha = self.terrain_lookup(lx, ly) if self.terrain_lookup else 1.0
        delta = min(TERRAIN_CHOICES, key=lambda c: abs(c - true_alpha))
        return SketchRequest(label=name, points=poly.vertices.copy(), delta=delta)

    def maybe_statement(self, t: float, true_target_pos, codebook) -> Statement | None:
        if self.model.mode not in (MODE_PASSIVE, MODE_BOTH):
            return None
        period = self.model.push_period
        if period is None or t <= 0 or (int(t) % int(period)) != 0:
            return None
        return volunteer_statement(true_target_pos, codebook, self.model, self.rng)

    def answer(self, query: Query, true_target_pos, true_mode: int, codebook,
               t: float = 0.0) -> str:
        if self.model.mode == MODE_PASSIVE:
            return ANSWER_NULL
        return answer_query(true_target_pos, true_mode, query, self.model,
                            codebook, self.rng)
