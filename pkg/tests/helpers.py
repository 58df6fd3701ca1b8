"""Shared oracles and scenario builders used by unit suites and the acceptance gate."""

import json
import math
import time

import numpy as np

from sketchsearch.autolabel import label_membership
from sketchsearch.belief import ParticleBelief, reweight
from sketchsearch.planner import ActionPair, Planner, PlannerConfig
from sketchsearch.world import TerrainGrid, WorldParams, default_network


# ---------------------------------------------------------------------------
# dense-sampling oracle for the compass label tables


def dense_oracle_tables(model, centroid, radius, n=10_000, seed=99):
    """Independent dense estimate of the constant-radius label integral:
    random bearings instead of the evenly spaced ring."""
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0, 2 * math.pi, n)
    pts = np.column_stack([centroid[0] + radius * np.cos(thetas),
                           centroid[1] + radius * np.sin(thetas)])
    probs = model.probabilities(pts)
    member = label_membership(thetas)
    joint = probs.T @ member / n
    col = joint.sum(axis=0, keepdims=True)
    row = joint.sum(axis=1, keepdims=True)
    return joint, joint / np.where(col == 0, 1, col), joint / np.where(row == 0, 1, row)


# ---------------------------------------------------------------------------
# exact-Bayes grid oracle for the particle machinery

GRID_SIZE = 10
GRID_STAY = 0.4


def _grid_transition_tables():
    n = GRID_SIZE * GRID_SIZE
    T = np.zeros((n, n))
    dest_mat = np.full((n, 5), -1)
    cum_mat = np.ones((n, 5))
    for s in range(n):
        r, c = divmod(s, GRID_SIZE)
        nbrs = []
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < GRID_SIZE and 0 <= cc < GRID_SIZE:
                nbrs.append(rr * GRID_SIZE + cc)
        opts = [s] + nbrs
        probs = np.zeros(len(opts))
        probs[0] = GRID_STAY + (1 - GRID_STAY) * (4 - len(nbrs)) / 4.0
        probs[1:] = (1 - GRID_STAY) / 4.0
        for o, p in zip(opts, probs):
            T[s, o] += p
        dest_mat[s, :len(opts)] = opts
        cum_mat[s, :len(opts)] = np.cumsum(probs)
    return T, dest_mat, cum_mat


def _grid_hit_likelihood(sensor):
    cells = np.arange(GRID_SIZE * GRID_SIZE)
    r, c = np.divmod(cells, GRID_SIZE)
    d = np.abs(r - sensor[0]) + np.abs(c - sensor[1])
    return np.exp(-d / 2.0)


def grid_oracle_max_tv(n_particles=100_000, steps=20, seed=99) -> float:
    """Max total-variation distance between the shared particle update path and
    the exact discrete forward filter over a scripted episode."""
    rng = np.random.default_rng(seed)
    T, dest_mat, cum_mat = _grid_transition_tables()
    n_states = GRID_SIZE * GRID_SIZE

    sensors = [(step % GRID_SIZE, (3 * step) % GRID_SIZE) for step in range(steps)]
    true_state = 37
    obs = []
    for sensor in sensors:
        row_dest = dest_mat[true_state]
        row_cum = cum_mat[true_state]
        u = rng.random()
        true_state = int(row_dest[int((u > row_cum).sum())])
        obs.append(rng.random() < _grid_hit_likelihood(sensor)[true_state])

    exact = np.full(n_states, 1.0 / n_states)
    particles = rng.integers(0, n_states, n_particles)
    weights = np.full(n_particles, 1.0 / n_particles)
    max_tv = 0.0
    for sensor, o in zip(sensors, obs):
        exact = T.T @ exact
        u = rng.random(n_particles)
        choice = (u[:, None] > cum_mat[particles]).sum(axis=1)
        particles = dest_mat[particles, choice]

        hit = _grid_hit_likelihood(sensor)
        lik = hit if o else (1.0 - hit)
        exact = exact * lik
        exact /= exact.sum()
        weights, idx = reweight(weights, lik[particles], rng, 0.5)
        if idx is not None:
            particles = particles[idx]

        est = np.bincount(particles, weights=weights, minlength=n_states)
        max_tv = max(max_tv, 0.5 * float(np.abs(est - exact).sum()))
    return max_tv


# ---------------------------------------------------------------------------
# scripted detect-on-arrival scenario (predictive vs blind mechanism)


def detect_on_arrival_scenario():
    """Belief with a dominant far hypothesis plus a detectable cluster dead
    ahead of the executing action. Returns node distances of the chosen moves
    to the detection spot and to the far mass, for predictive and blind."""
    net = default_network()
    cfg = PlannerConfig(simulations=900, max_depth=8, rollout_depth=4)
    world = WorldParams(target_road_speed=2.0, target_road_speed_sd=0.5,
                        target_offroad_speed=1.0, target_offroad_speed_sd=0.2,
                        mode_stay_prob=1.0)
    node = 14
    move = net.neighbors(node)[0]
    planner = Planner(net, TerrainGrid(), world, cfg, seed=20)
    pts_geo, _, end_heading = planner.gen.route_geometry(node, move)
    end = np.asarray(pts_geo[-1])
    fwd = np.array([math.cos(end_heading), math.sin(end_heading)])
    detect_spot = end + fwd * 110.0

    belief = ParticleBelief.uniform_on_roads(net, 1000, np.random.default_rng(21))
    far_idx = np.argmax(np.hypot(belief.states.pos[:, 0] - end[0],
                                 belief.states.pos[:, 1] - end[1]))
    far_pos = belief.states.pos[far_idx].copy()
    belief.states.pos[:700] = far_pos
    belief.states.pos[700:] = detect_spot

    branches, info = planner.predictive_plan(belief, ActionPair(move, None), node,
                                             600.0, np.random.default_rng(22))
    blind_planner = Planner(net, TerrainGrid(), world, cfg, seed=20)
    blind = blind_planner.blind_plan(belief, ActionPair(move, None), node, 600.0,
                                     np.random.default_rng(22))
    det_action = branches.get("detected")
    nodes = net.nodes
    return {
        "has_detected_branch": det_action is not None,
        "d_detect_pred": float(np.hypot(*(nodes[det_action.move] - detect_spot)))
        if det_action else None,
        "d_detect_blind": float(np.hypot(*(nodes[blind.move] - detect_spot))),
        "d_far_pred": float(np.hypot(*(nodes[det_action.move] - far_pos)))
        if det_action else None,
        "d_far_blind": float(np.hypot(*(nodes[blind.move] - far_pos))),
        "budgets": info["budgets"],
    }


# ---------------------------------------------------------------------------
# headless protocol client flow (service e2e)


def run_session_flow(session_dir) -> float:
    """Drive a full session through the websocket protocol; returns elapsed
    wall seconds. Raises AssertionError on any protocol expectation failure."""
    from fastapi.testclient import TestClient

    from sketchsearch.episode import EpisodeConfig
    from sketchsearch.service import ServiceConfig, create_app

    def recv_until(ws, kind, limit=400):
        seen = []
        for _ in range(limit):
            frame = json.loads(ws.receive_text())
            seen.append(frame)
            if frame["type"] == kind:
                return frame, seen
        raise AssertionError(f"no {kind!r} frame within {limit} frames")

    t_start = time.monotonic()
    config = ServiceConfig(
        mode="both", pace=0.002,
        episode=EpisodeConfig(
            n_particles=400,
            world=WorldParams(spawn_min_distance=600.0),
            planner=PlannerConfig(simulations=60, max_depth=6, rollout_depth=4,
                                  ask_policy="always")),
        session_dir=str(session_dir))
    app = create_app(config)
    client = TestClient(app)
    with client.websocket_connect("/session?seed=1234") as ws:
        recv_until(ws, "hello")
        tel0, _ = recv_until(ws, "telemetry")
        assert tel0["query_space"] == 1

        cx, cy = 820.0, 180.0
        th = np.linspace(0, 2 * math.pi, 200, endpoint=False)
        pts = [[round(float(cx + 110 * math.cos(a)), 2),
                round(float(cy + 110 * math.sin(a)), 2)] for a in th]
        ws.send_text(json.dumps({"type": "sketch", "label": "area1", "delta": 1.0,
                                 "points": pts}))
        ack, _ = recv_until(ws, "sketch_ack")
        assert len(ack["polygon"]) == 4
        assert ack["query_space"] == 6

        tel1, _ = recv_until(ws, "telemetry")
        b = np.asarray(tel1["belief"], dtype=float)
        d_before = float(np.hypot(b[:, 0] - cx, b[:, 1] - cy).mean())

        ws.send_text(json.dumps({"type": "statement", "positive": True,
                                 "relation": "Inside", "label": "area1"}))
        recv_until(ws, "statement_ack")
        tel2, _ = recv_until(ws, "telemetry")
        b2 = np.asarray(tel2["belief"], dtype=float)
        d_after = float(np.hypot(b2[:, 0] - cx, b2[:, 1] - cy).mean())
        assert d_after < 0.8 * d_before

        query, _ = recv_until(ws, "query")
        assert query["label"] == "area1"
        ws.send_text(json.dumps({"type": "answer", "id": query["id"],
                                 "answer": "yes"}))
        _, seen = recv_until(ws, "telemetry")
        assert all(f["type"] != "error" for f in seen)
    return time.monotonic() - t_start
