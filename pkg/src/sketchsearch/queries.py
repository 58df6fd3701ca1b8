"""Query and statement vocabulary plus their state likelihoods.

Robot queries pair a relation with a sketch label (near / four cardinals) or
ask about the target's travel mode; human statements additionally use the
eight compass bearings and "inside". The same likelihood functions back the
belief update, the simulated responder, and the planner's generative model,
so fusion and generation stay consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autolabel import COMPASS_LABELS, label_likelihood
from .geometry import contains_many
from .world import OFF_ROAD

ANSWER_YES = "yes"
ANSWER_NO = "no"
ANSWER_NULL = "null"
HUMAN_ANSWERS = (ANSWER_YES, ANSWER_NO, ANSWER_NULL)

NEAR = "Near"
INSIDE = "Inside"
MODE_RELATION = "OffRoad"

QUERY_RELATIONS = (NEAR, "East", "West", "North", "South")
STATEMENT_RELATIONS = (NEAR, INSIDE) + COMPASS_LABELS


class UnknownReference(KeyError):
    """Query or statement names a sketch label that was never registered."""


@dataclass(frozen=True)
class Query:
    relation: str  # one of QUERY_RELATIONS, or MODE_RELATION with label None
    label: str | None

    def text(self) -> str:
        if self.relation == MODE_RELATION:
            return "Has the target gone off-road?"
        if self.relation == NEAR:
            return f"Is the target Near {self.label}?"
        return f"Is the target {self.relation} of {self.label}?"


MODE_QUERY = Query(MODE_RELATION, None)


@dataclass(frozen=True)
class Statement:
    positive: bool
    relation: str
    label: str

    def text(self) -> str:
        verb = "is" if self.positive else "is not"
        return f"Target {verb} {self.relation} {self.label}"


def _sketch(codebook, label: str):
    try:
        return codebook.sketches[label]
    except KeyError:
        raise UnknownReference(label) from None


def relation_likelihood(relation: str, sketch, positions: np.ndarray) -> np.ndarray:
    """p(relation applies | s) in [0, 1] per state; bearings use the label tables."""
    if relation == NEAR:
        return sketch.range_model.near_probability(positions)
    if relation == INSIDE:
        return contains_many(sketch.polygon, positions).astype(float)
    if relation in COMPASS_LABELS:
        return np.clip(label_likelihood(sketch, positions, relation, True), 0.0, 1.0)
    raise ValueError(f"unknown relation {relation!r}")


def query_truth_likelihood(query: Query, positions: np.ndarray, modes: np.ndarray,
                           codebook) -> np.ndarray:
    """Probability a perfectly accurate human answers Yes, per state."""
    if query.relation == MODE_RELATION:
        return (modes == OFF_ROAD).astype(float)
    return relation_likelihood(query.relation, _sketch(codebook, query.label), positions)


def corrupt_binary(p_yes: np.ndarray, eta: float) -> np.ndarray:
    """Accuracy-corrupted Yes probability: truthful mass scaled by eta, the
    remainder moved to the single alternative answer."""
    return eta * p_yes + (1.0 - eta) * (1.0 - p_yes)


def answer_likelihood(query: Query, answer: str, positions: np.ndarray,
                      modes: np.ndarray, codebook, eta: float) -> np.ndarray:
    """Per-state likelihood of a non-null answer under assumed accuracy eta."""
    p_yes = corrupt_binary(query_truth_likelihood(query, positions, modes, codebook), eta)
    return p_yes if answer == ANSWER_YES else 1.0 - p_yes


def statement_likelihood(statement: Statement, positions: np.ndarray, codebook,
                         eta: float = 1.0) -> np.ndarray:
    """Per-state likelihood of a pushed statement under assumed accuracy eta.

    Statements are human observations like answers, so the same accuracy
    corruption folds into their likelihood; eta=1 is the raw relation model.
    """
    lik = relation_likelihood(statement.relation, _sketch(codebook, statement.label),
                              positions)
    if not statement.positive:
        lik = 1.0 - lik
    return corrupt_binary(lik, eta)
