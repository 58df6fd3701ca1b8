"""Weighted bootstrap particle filter over target position and travel mode.

Prediction runs every particle through the same transition kernel as the
ground-truth world; weighting fuses the robot's cone sensor, query answers
(with the assumed accuracy/availability folded in), and pushed statements.
Systematic resampling fires when the effective sample size halves, and a
fully degenerate update falls back to the road-network prior rather than
killing the episode.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import queries
from .queries import ANSWER_NULL, Query, Statement
from .world import (
    OFF_ROAD,
    ON_ROAD,
    ROBOT_OBSERVATIONS,
    RoadNetwork,
    TargetArrays,
    TerrainGrid,
    WorldParams,
    advance_targets,
    sense_likelihood_many,
)

log = logging.getLogger(__name__)

DEFAULT_PARTICLES = 10_000
REINIT_ONROAD_PROB = 0.8  # mode prior used by the degenerate-weight fallback


def ess(weights: np.ndarray) -> float:
    return 1.0 / float(np.square(weights).sum())


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions).clip(0, n - 1)


class DegenerateWeights(RuntimeError):
    """Every particle weight vanished in a measurement update."""


def reweight(weights: np.ndarray, likelihood: np.ndarray, rng: np.random.Generator,
             resample_threshold: float = 0.5) -> tuple[np.ndarray, np.ndarray | None]:
    """Shared measurement-update core: multiply, renormalize, and systematic
    resampling when the effective sample size falls below the threshold share.

    Returns (weights, resample_indices or None); raises DegenerateWeights when
    the posterior mass is zero or non-finite.
    """
    w = weights * likelihood
    total = float(w.sum())
    if not math.isfinite(total) or total <= 0.0:
        raise DegenerateWeights("all particle weights vanished")
    w /= total
    if resample_threshold > 0 and ess(w) < resample_threshold * len(w):
        idx = systematic_resample(w, rng)
        return np.full(len(w), 1.0 / len(w)), idx
    return w, None


def _sample_road_states(net: RoadNetwork, n: int, rng: np.random.Generator,
                        onroad_prob: float) -> TargetArrays:
    p = net.edge_len / net.edge_len.sum()
    edge = rng.choice(len(net.edges), size=n, p=p)
    t = rng.uniform(0.0, net.edge_len[edge])
    u = net.nodes[net.edges[edge, 0]]
    pos = u + net.edge_unit[edge] * t[:, None]
    direction = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    heading = np.arctan2(direction * net.edge_unit[edge, 1],
                         direction * net.edge_unit[edge, 0])
    mode = np.where(rng.random(n) < onroad_prob, ON_ROAD, OFF_ROAD).astype(np.int8)
    return TargetArrays(pos=pos, mode=mode, edge=edge.astype(np.int64), tparam=t,
                        direction=direction, heading=heading)


@dataclass
class ParticleBelief:
    states: TargetArrays
    weights: np.ndarray
    resample_threshold: float = 0.5  # of N
    degenerate_events: int = 0

    @classmethod
    def uniform_on_roads(cls, net: RoadNetwork, n: int, rng: np.random.Generator,
                         onroad_prob: float = 1.0) -> "ParticleBelief":
        states = _sample_road_states(net, n, rng, onroad_prob)
        return cls(states=states, weights=np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return len(self.weights)

    def copy(self) -> "ParticleBelief":
        return ParticleBelief(self.states.copy(), self.weights.copy(),
                              self.resample_threshold, self.degenerate_events)

    # -- dynamics -----------------------------------------------------------

    def predict(self, dt: float, grid: TerrainGrid, net: RoadNetwork,
                rng: np.random.Generator, params: WorldParams) -> None:
        advance_targets(self.states, dt, grid, net, rng, params)

    # -- measurement --------------------------------------------------------

    def update_weights(self, likelihood: np.ndarray, net: RoadNetwork,
                       rng: np.random.Generator) -> None:
        """Multiply, renormalize, resample on low ESS; degenerate -> road prior."""
        try:
            w, idx = reweight(self.weights, likelihood, rng, self.resample_threshold)
        except DegenerateWeights:
            self.degenerate_events += 1
            log.warning("degenerate weights (event %d); reinitializing from road prior",
                        self.degenerate_events)
            n = len(self)
            self.states = _sample_road_states(net, n, rng, REINIT_ONROAD_PROB)
            self.weights = np.full(n, 1.0 / n)
            return
        if idx is not None:
            self.states = self.states.take(idx)
        self.weights = w

    def weight_and_resample(self, o_r: str, o_h: str, a_q: Query | None,
                            robot_pos, robot_heading: float, codebook,
                            assumed_eta: float, net: RoadNetwork,
                            rng: np.random.Generator, params: WorldParams) -> None:
        """Joint robot/human measurement update for one tick."""
        lik = sense_likelihood_many(robot_pos, robot_heading, self.states.pos,
                                    params)[:, ROBOT_OBSERVATIONS.index(o_r)]
        if a_q is not None and o_h != ANSWER_NULL:
            lik = lik * queries.answer_likelihood(a_q, o_h, self.states.pos,
                                                  self.states.mode, codebook,
                                                  assumed_eta)
        self.update_weights(lik, net, rng)

    def fuse_statement(self, statement: Statement, codebook, net: RoadNetwork,
                       rng: np.random.Generator, assumed_eta: float = 1.0) -> None:
        lik = queries.statement_likelihood(statement, self.states.pos, codebook,
                                           assumed_eta)
        self.update_weights(lik, net, rng)

    # -- summaries ----------------------------------------------------------

    def mode_probability(self, mode: int) -> float:
        return float(self.weights[self.states.mode == mode].sum())

    def mean_position(self) -> np.ndarray:
        return self.weights @ self.states.pos

    def downsample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        """Up to k representative particle positions for telemetry/plotting."""
        if len(self) <= k:
            return self.states.pos.copy()
        idx = systematic_resample(self.weights, rng)[:: max(1, len(self) // k)][:k]
        return self.states.pos[idx]
