"""Single-episode engine: wiring between world, filter, planner, and human.

Each episode owns four independent seeded random streams (world, human,
planner, filter) derived from one episode seed, and writes a line-delimited
event log that replays bit-for-bit. The loop interleaves: choose an action
pair, fuse the query answer, pre-plan the next decision while the movement
executes (predictive branches or the blind dynamics-only plan), fuse the
per-tick sensor stream, and register arriving sketches at decision
boundaries so each search sees a frozen model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .belief import ParticleBelief
from .pipeline import compile_sketch
from .planner import (
    ActionPair,
    Codebook,
    Planner,
    PlannerConfig,
    register_sketch,
)
from .queries import ANSWER_NULL, MODE_RELATION, Query, Statement, answer_likelihood
from .sim_human import HumanModel, SimulatedHuman, SketchParams, SketchRequest
from .world import (
    OBS_CAPTURED,
    RobotState,
    RoadNetwork,
    TerrainGrid,
    WorldParams,
    advance_targets,
    apply_sketch_terrain,
    arrays_to_state,
    begin_move,
    default_network,
    glimpse,
    load_map,
    random_road_state,
    reward,
    sense,
    state_to_arrays,
    step_robot,
)

LOG_VERSION = 1


@dataclass
class EpisodeConfig:
    seed: int = 0
    map_path: str | None = None  # None -> bundled default map
    n_particles: int = 1500
    world: WorldParams = field(default_factory=WorldParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    human: HumanModel | None = None
    sketch_params: SketchParams = field(default_factory=SketchParams)
    glimpse_period: float | None = 30.0
    glimpse_noise: float = 20.0
    query_deadline: float = 15.0  # seconds before an unanswered query fuses Null
    robot_start: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["human"] = asdict(self.human) if self.human else None
        return d


@dataclass
class RunMetrics:
    seed: int
    captured: bool
    time_to_capture: float | None
    queries_asked: int
    queries_answered: int
    sketches: int
    statements: int
    degenerate_events: int
    reward_sum: float
    decisions: int

    def to_dict(self) -> dict:
        return asdict(self)


class EpisodeLog:
    """Append-only event list; one JSON object per line on disk."""

    def __init__(self, header: dict):
        self.records: list[dict] = [dict(ev="header", version=LOG_VERSION, **header)]

    def add(self, ev: str, **fields) -> None:
        self.records.append(dict(ev=ev, **fields))

    def dumps(self) -> str:
        return "\n".join(json.dumps(r, separators=(",", ":")) for r in self.records) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @staticmethod
    def read(path) -> list[dict]:
        with open(path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


def _r(x: float, nd: int = 3) -> float:
    return round(float(x), nd)


def _query_key(q: Query | None) -> str | None:
    if q is None:
        return None
    if q.relation == MODE_RELATION:
        return "mode"
    return f"{q.relation}:{q.label}"


def load_network(config: EpisodeConfig) -> RoadNetwork:
    return default_network() if config.map_path is None else load_map(config.map_path)


class PendingQuery:
    def __init__(self, query: Query, asked_at: float, deadline: float):
        self.query = query
        self.asked_at = asked_at
        self.deadline = deadline


def run_episode(config: EpisodeConfig, human_source=None, log_path=None,
                tick_hook=None) -> tuple[RunMetrics, EpisodeLog]:
    """Run one seeded episode; returns metrics and the full event log.

    `human_source` overrides the built-in simulated human (used by live
    sessions and log replay); it must provide poll/ask in the SimulatedHuman
    shape. `tick_hook(engine_state)` is called once per tick for telemetry.
    """
    net = load_network(config)
    params = config.world
    ss = np.random.SeedSequence(config.seed)
    world_seed, human_seed, planner_seed, filter_seed = ss.spawn(4)
    world_rng = np.random.default_rng(world_seed)
    filter_rng = np.random.default_rng(filter_seed)
    planner_int = int(planner_seed.generate_state(1)[0])

    true_grid = TerrainGrid(params.extent, params.terrain_cell)
    for delta, poly in net.terrain_regions:
        apply_sketch_terrain(true_grid, poly, delta)
    assumed_grid = TerrainGrid(params.extent, params.terrain_cell)

    start = config.robot_start if config.robot_start is not None \
        else net.nearest_node((params.extent / 2, params.extent / 2))
    rx, ry = net.nodes[start]
    robot = RobotState(float(rx), float(ry), 0.0, start)
    spawn = random_road_state(net, world_rng)
    for _ in range(200):  # keep the start out of the robot's immediate reach
        if math.hypot(spawn.x - rx, spawn.y - ry) >= params.spawn_min_distance:
            break
        spawn = random_road_state(net, world_rng)
    truth = state_to_arrays(spawn)

    belief = ParticleBelief.uniform_on_roads(net, config.n_particles, filter_rng)
    codebook = Codebook(config.planner.mode_query)
    planner = Planner(net, assumed_grid, params, config.planner, codebook, seed=planner_int)

    human = human_source
    if human is None and config.human is not None:
        human = SimulatedHuman(config.human, config.sketch_params, net.landmarks,
                               lambda x, y: true_grid.lookup((x, y)),
                               np.random.default_rng(human_seed))

    log = EpisodeLog({"seed": config.seed, "config": config.to_dict()})
    log.add("init", target=[_r(truth.pos[0, 0]), _r(truth.pos[0, 1])],
            robot_node=start)

    t = 0.0
    captured = False
    reward_sum = 0.0
    decisions = 0
    queries_asked = queries_answered = sketches = statements = 0
    pending_sketches: list[SketchRequest] = []
    pending_query: PendingQuery | None = None

    def target_state():
        return arrays_to_state(truth)

    def fuse_answer(query: Query, answer: str, at: float):
        nonlocal queries_answered
        log.add("answer", t=at, query=_query_key(query), answer=answer)
        if answer == ANSWER_NULL:
            return
        queries_answered += 1
        lik = answer_likelihood(query, answer, belief.states.pos, belief.states.mode,
                                codebook, config.planner.assumed_eta)
        belief.update_weights(lik, net, filter_rng)

    def handle_human_events(now: float):
        nonlocal sketches, statements, pending_query
        if human is None:
            return
        for kind, payload in human_events(now):
            if kind == "sketch":
                pending_sketches.append(payload)
                log.add("sketch", t=now, label=payload.label,
                        delta=payload.delta,
                        points=[[_r(p[0]), _r(p[1])] for p in payload.points])
            elif kind == "statement":
                statements += 1
                log.add("statement", t=now, positive=payload.positive,
                        relation=payload.relation, label=payload.label,
                        text=payload.text())
                try:
                    belief.fuse_statement(payload, codebook, net, filter_rng,
                                          config.planner.assumed_eta)
                except KeyError:
                    log.add("statement_rejected", t=now, label=payload.label)
            elif kind == "answer":
                query, answer = payload
                if pending_query is not None and query == pending_query.query:
                    fuse_answer(query, answer, now)
                    pending_query = None

    def human_events(now: float):
        events = []
        sk = human.maybe_sketch(now, (truth.pos[0, 0], truth.pos[0, 1]))
        if sk is not None:
            events.append(("sketch", sk))
        stmt = human.maybe_statement(now, (truth.pos[0, 0], truth.pos[0, 1]), codebook)
        if stmt is not None:
            events.append(("statement", stmt))
        if hasattr(human, "poll"):
            events.extend(human.poll(now))
        return events

    def decide(source: str, forced: ActionPair | None = None):
        nonlocal decisions, reward_sum, queries_asked, pending_query
        if forced is not None:
            action, info = forced, {}
        else:
            action, info = planner.search(belief, robot.node, robot.heading,
                                          params.t_max - t)
        decisions += 1
        log.add("decide", t=t, move=int(action.move), query=_query_key(action.query),
                source=source, sims=info.get("simulations"),
                values={k: _r(v, 4) for k, v in info.get("root_values", {}).items()},
                visits=info.get("root_visits", {}))
        step_reward = reward(truth.pos[0], (robot.x, robot.y), action.query,
                             params.capture_radius)
        reward_sum += step_reward
        if action.query is not None:
            queries_asked += 1
            log.add("query", t=t, query=_query_key(action.query),
                    text=action.query.text())
            ts = target_state()
            immediate = human.answer(action.query, (ts.x, ts.y), ts.mode, codebook, t) \
                if human is not None else ANSWER_NULL
            if immediate is None:
                pending_query = PendingQuery(action.query, t, t + config.query_deadline)
            else:
                fuse_answer(action.query, immediate, t)
        return action

    action = decide("search")

    while t < params.t_max and not captured:
        try:
            robot_after = begin_move(robot, action.move, net)
        except Exception:
            log.add("illegal_move", t=t, move=int(action.move))
            robot_after = robot
        robot = robot_after
        start_node = robot.node

        branches = {}
        blind_action = None
        if config.planner.predictive:
            branches, pinfo = planner.predictive_plan(belief, action, start_node,
                                                      params.t_max - t, planner.np_rng)
            log.add("preplan", t=t, probs={k: _r(v, 4) for k, v in
                                           pinfo["obs_probs"].items()},
                    budgets=pinfo["budgets"])
        else:
            blind_action = planner.blind_plan(belief, action, start_node,
                                              params.t_max - t, planner.np_rng)
            log.add("preplan", t=t, blind=True)

        last_o_r = "none"
        while t < params.t_max:
            t += 1.0
            advance_targets(truth, 1.0, true_grid, net, world_rng, params)
            robot, move_done = step_robot(robot, 1.0, net, world_rng, params)
            tpos = truth.pos[0]
            o_r = sense(robot, tpos, world_rng, params)
            last_o_r = o_r
            dist = math.hypot(tpos[0] - robot.x, tpos[1] - robot.y)
            log.add("tick", t=t, robot=[_r(robot.x), _r(robot.y)],
                    heading=_r(robot.heading), target=[_r(tpos[0]), _r(tpos[1])],
                    o_r=o_r, mode=int(truth.mode[0]))
            if o_r == OBS_CAPTURED and dist <= params.capture_radius:
                captured = True
                reward_sum += 100.0
                log.add("capture", t=t, distance=_r(dist))
            belief.predict(1.0, assumed_grid, net, filter_rng, params)
            belief.weight_and_resample(o_r, ANSWER_NULL, None, (robot.x, robot.y),
                                       robot.heading, codebook,
                                       config.planner.assumed_eta, net, filter_rng,
                                       params)
            if captured:
                break
            if config.glimpse_period and int(t) % int(config.glimpse_period) == 0:
                g = glimpse(tpos, config.glimpse_noise, world_rng)
                log.add("glimpse", t=t, pos=[_r(g[0]), _r(g[1])])
                if human is not None:
                    human.observe_glimpse(g)
            handle_human_events(t)
            if pending_query is not None and t >= pending_query.deadline:
                fuse_answer(pending_query.query, ANSWER_NULL, t)
                pending_query = None
            if tick_hook is not None:
                tick_hook(EngineView(t, robot, truth, belief, codebook, captured))
            if move_done:
                break

        if captured or t >= params.t_max:
            break

        for req in pending_sketches:
            try:
                sk = compile_sketch(req.label, req.points, req.delta)
                register_sketch(codebook, sk, assumed_grid)
                sketches += 1
                log.add("sketch_registered", t=t, label=req.label,
                        vertices=[[_r(v[0]), _r(v[1])] for v in sk.polygon.vertices],
                        delta=req.delta, n_queries=len(codebook.query_actions))
            except Exception as err:  # duplicate or degenerate sketch: keep episode alive
                log.add("sketch_rejected", t=t, label=req.label, reason=str(err))
        pending_sketches.clear()

        if config.planner.predictive and last_o_r in branches:
            action = decide(f"predictive:{last_o_r}", forced=branches[last_o_r])
        elif blind_action is not None:
            action = decide("blind", forced=blind_action)
        else:
            action = decide("search")

    ttc = t if captured else None
    log.add("end", t=t, captured=captured, ttc=ttc, queries_asked=queries_asked,
            queries_answered=queries_answered, sketches=sketches,
            statements=statements, degenerate=belief.degenerate_events,
            reward_sum=_r(reward_sum, 3))
    metrics = RunMetrics(seed=config.seed, captured=captured, time_to_capture=ttc,
                         queries_asked=queries_asked, queries_answered=queries_answered,
                         sketches=sketches, statements=statements,
                         degenerate_events=belief.degenerate_events,
                         reward_sum=reward_sum, decisions=decisions)
    if log_path is not None:
        log.write(log_path)
    return metrics, log


@dataclass
class EngineView:
    """Read-only per-tick snapshot passed to telemetry hooks."""

    t: float
    robot: RobotState
    truth: object
    belief: ParticleBelief
    codebook: Codebook
    captured: bool


class ReplayHuman:
    """Feeds logged human events back into the engine at their original ticks.

    Makes any episode log replayable headlessly: sketches, statements, and
    answers fire at the recorded ticks in their recorded within-tick order.
    An answer recorded at the tick the query was asked is returned
    synchronously (the simulated-human path); later answers queue and arrive
    through poll at their original tick (the live-session path).
    """

    def __init__(self, records: list[dict]):
        self.events: dict[float, list[tuple[str, object]]] = {}
        self.ask_keys: dict[float, set] = {}
        for r in records:
            if r["ev"] == "sketch":
                payload = SketchRequest(r["label"], np.asarray(r["points"], dtype=float),
                                        r.get("delta"))
                self.events.setdefault(r["t"], []).append(("sketch", payload))
            elif r["ev"] == "statement":
                payload = Statement(r["positive"], r["relation"], r["label"])
                self.events.setdefault(r["t"], []).append(("statement", payload))
            elif r["ev"] == "answer":
                self.events.setdefault(r["t"], []).append(("answer", r))
            elif r["ev"] == "query":
                self.ask_keys.setdefault(r["t"], set()).add(r["query"])

    def observe_glimpse(self, pos):
        pass

    def maybe_sketch(self, t, _pos):
        return None  # everything is delivered through poll, in log order

    def maybe_statement(self, t, _pos, _codebook):
        return None

    def answer(self, query: Query, _pos, _mode, _codebook, t: float = 0.0):
        key = _query_key(query)
        for item in list(self.events.get(t, [])):
            if item[0] == "answer" and item[1]["query"] == key:
                self.events[t].remove(item)
                return item[1]["answer"]
        return None  # answered later (or never): resolved via poll/deadline

    def poll(self, t: float):
        # per-tick poll runs before any boundary ask at the same tick, so an
        # answer to a query asked at this very tick is the synchronous kind
        # and must stay for answer() to pick up
        out = []
        asked_now = self.ask_keys.get(t, set())
        remaining = []
        for item in self.events.pop(t, []):
            kind, rec = item
            if kind == "answer":
                if rec["query"] in asked_now:
                    remaining.append(item)
                else:
                    out.append(("answer", (_query_from_key(rec["query"]),
                                           rec["answer"])))
            else:
                out.append((kind, rec))
        if remaining:
            self.events[t] = remaining
        return out


def _query_from_key(key: str) -> Query:
    if key == "mode":
        return Query(MODE_RELATION, None)
    relation, label = key.split(":", 1)
    return Query(relation, label)


def replay_episode(log_path) -> tuple[bool, int | None]:
    """Re-run an episode from its log header; returns (identical, first_diff_line)."""
    records = EpisodeLog.read(log_path)
    header = records[0]
    cfg = config_from_dict(header["config"])
    _, log = run_episode(cfg)
    new = log.dumps().splitlines()
    old = [json.dumps(r, separators=(",", ":")) for r in records]
    if new == old:
        return True, None
    for i, (a, b) in enumerate(zip(old, new)):
        if a != b:
            return False, i
    return False, min(len(old), len(new))


def config_from_dict(d: dict) -> EpisodeConfig:
    human = HumanModel(**d["human"]) if d.get("human") else None
    return EpisodeConfig(
        seed=d["seed"],
        map_path=d.get("map_path"),
        n_particles=d["n_particles"],
        world=WorldParams(**d["world"]),
        planner=PlannerConfig(**d["planner"]),
        human=human,
        sketch_params=SketchParams(**{**d["sketch_params"],
                                      "centroid": tuple(d["sketch_params"]["centroid"])}),
        glimpse_period=d.get("glimpse_period"),
        glimpse_noise=d.get("glimpse_noise", 20.0),
        query_deadline=d.get("query_deadline", 15.0),
        robot_start=d.get("robot_start"),
    )
