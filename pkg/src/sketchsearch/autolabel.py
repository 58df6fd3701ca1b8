"""Compass-label tables for softmax classes, built by ring sampling.

Each of the eight compass labels covers an overlapping 90-degree arc (45
degrees of overlap with each neighbor), so any bearing carries two labels and
the eight 45-degree boundary angles carry three. Sampling the class
probabilities on a ring around the sketch centroid gives the joint p(class,
label), from which both fusion (p(class|label)) and label generation
(p(label|class)) tables follow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .semantics import SoftmaxModel

log = logging.getLogger(__name__)

# ascending arc-center order: rotating the plane by +90 deg shifts columns by 2
COMPASS_LABELS = (
    "East",
    "NorthEast",
    "North",
    "NorthWest",
    "West",
    "SouthWest",
    "South",
    "SouthEast",
)
LABEL_CENTERS = {name: i * math.pi / 4 for i, name in enumerate(COMPASS_LABELS)}
HALF_WIDTH = math.pi / 4  # each label spans its center +/- 45 degrees


class ZeroLikelihood(RuntimeError):
    """All particle weights vanished during a label fusion."""


def canonical_labels(theta: float) -> set[str]:
    """All compass labels whose (closed) arc contains the bearing theta."""
    out = set()
    for name, center in LABEL_CENTERS.items():
        d = (theta - center) % (2 * math.pi)
        d = min(d, 2 * math.pi - d)
        if d <= HALF_WIDTH + 1e-12:
            out.add(name)
    return out


def label_membership(thetas: np.ndarray) -> np.ndarray:
    """(N, 8) boolean mask of arc membership for an array of bearings."""
    centers = np.array([LABEL_CENTERS[n] for n in COMPASS_LABELS])
    d = np.abs((thetas[:, None] - centers[None, :] + math.pi) % (2 * math.pi) - math.pi)
    return d <= HALF_WIDTH + 1e-12


@dataclass(frozen=True)
class LabelTables:
    """Joint and conditional class/label tables for one softmax model."""

    joint: np.ndarray = field(repr=False)  # (K, 8)
    class_given_label: np.ndarray = field(repr=False)  # columns sum to 1
    label_given_class: np.ndarray = field(repr=False)  # rows sum to 1

    @property
    def n_classes(self) -> int:
        return self.joint.shape[0]


def build_tables(
    model: SoftmaxModel,
    centroid,
    ring_radius: float,
    samples: int = 360,
) -> LabelTables:
    """Monte Carlo joint p(class, label) from evenly spaced ring points.

    joint[c, l] = mean over ring points of p(c|s) * 1[l applies at s]. Ring
    points sit at `ring_radius` from the centroid, uniform in angle.
    """
    if samples < 8:
        raise ValueError("need at least 8 ring samples")
    if ring_radius <= 0:
        raise ValueError("ring radius must be positive")
    cx, cy = float(centroid[0]), float(centroid[1])
    thetas = 2 * math.pi * np.arange(samples) / samples
    pts = np.column_stack([cx + ring_radius * np.cos(thetas), cy + ring_radius * np.sin(thetas)])
    probs = model.probabilities(pts)  # (J, K)
    member = label_membership(thetas)  # (J, 8)
    joint = probs.T @ member / samples  # (K, 8)

    col_mass = joint.sum(axis=0)
    class_given_label = np.empty_like(joint)
    for j, mass in enumerate(col_mass):
        if mass > 0:
            class_given_label[:, j] = joint[:, j] / mass
        else:
            log.warning("label %s has zero mass; using uniform p(class|label)", COMPASS_LABELS[j])
            class_given_label[:, j] = 1.0 / joint.shape[0]

    row_mass = joint.sum(axis=1, keepdims=True)
    label_given_class = np.where(row_mass > 0, joint / np.where(row_mass == 0, 1, row_mass),
                                 1.0 / joint.shape[1])
    return LabelTables(joint=joint, class_given_label=class_given_label,
                       label_given_class=label_given_class)


def label_likelihood(sketch, positions: np.ndarray, label: str, positive: bool) -> np.ndarray:
    """Per-state likelihood of answering `label` (or its negation) about a sketch.

    Positive form: sum_c p(c|s) p(c|label). Negative form is the complement,
    which stays in [0, 1] because the positive form is a convex combination
    of column entries.
    """
    col = COMPASS_LABELS.index(label)
    probs = sketch.bearing_model.probabilities(positions)  # (N, K)
    lik = probs @ sketch.tables.class_given_label[:, col]
    return lik if positive else 1.0 - lik


def fuse_label(weights: np.ndarray, positions: np.ndarray, sketch, label: str,
               positive: bool) -> np.ndarray:
    """Reweight particles by a compass-label observation; returns normalized weights."""
    lik = label_likelihood(sketch, positions, label, positive)
    out = weights * lik
    total = out.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ZeroLikelihood(f"label '{label}' (positive={positive}) wiped out all weight")
    return out / total


def label_distribution(sketch, s) -> np.ndarray:
    """p(label | s) = sum_c p(label|c) p(c|s), over COMPASS_LABELS order."""
    probs = sketch.bearing_model.probabilities(np.asarray(s, dtype=float).reshape(1, 2))[0]
    return sketch.tables.label_given_class.T @ probs


def generate_label(sketch, s, rng: np.random.Generator) -> str:
    """Sample a compass label for state s from p(label | s)."""
    dist = label_distribution(sketch, s)
    return COMPASS_LABELS[rng.choice(len(COMPASS_LABELS), p=dist / dist.sum())]


def tables_to_csv(tables: LabelTables) -> str:
    """CSV dump, classes as rows and labels as columns (joint table)."""
    lines = ["class," + ",".join(COMPASS_LABELS)]
    for c in range(tables.n_classes):
        lines.append(str(c) + "," + ",".join(f"{v:.9g}" for v in tables.joint[c]))
    return "\n".join(lines) + "\n"
