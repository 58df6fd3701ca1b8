"""Online tree search over combined movement and query actions.

POMCP-style: UCT descent through alternating action/observation layers with
particle states pushed through a generative model (graph travel, switching
target dynamics on the assumed terrain grid, cone sensing, and the assumed
accuracy/availability human). The query action space grows as sketches are
registered; predictive planning pre-solves one tree per possible robot
observation while the current movement executes, splitting the budget in
proportion to each observation's predicted probability.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .autolabel import COMPASS_LABELS
from .belief import ParticleBelief
from .pipeline import SketchRecord
from .queries import (
    ANSWER_NO,
    ANSWER_NULL,
    ANSWER_YES,
    MODE_QUERY,
    MODE_RELATION,
    NEAR,
    QUERY_RELATIONS,
    Query,
)
from .world import (
    OBS_CAPTURED,
    OBS_DETECTED,
    OBS_NONE,
    OFF_ROAD,
    ON_ROAD,
    ROBOT_OBSERVATIONS,
    RoadNetwork,
    TerrainGrid,
    WorldParams,
    apply_sketch_terrain,
    sense_likelihood_many,
)


class DuplicateLabel(ValueError):
    """A sketch label was registered twice."""


class EmptyBelief(ValueError):
    """Search invoked with no particles."""


@dataclass
class PlannerConfig:
    simulations: int = 400
    gamma: float = 0.95
    uct_c: float = 50.0  # half the reward range
    max_depth: int = 30
    predictive: bool = True
    assumed_eta: float = 0.95
    assumed_xi: float = 0.9
    mode_query: bool = False
    # progressive widening over the move x query product space: only the
    # pw_init best-ranked actions are bandit arms at first, widening with
    # sqrt(visits); set pw_init very large to search the full space flat
    pw_init: int = 6
    pw_rate: float = 1.5
    # desk-scale guards for the growing query space: at most pw_query_max
    # query pairs join the root bandit (nearest sketches first), and internal
    # tree nodes simulate movement only unless tree_queries is set
    pw_query_max: int = 8
    tree_queries: bool = False
    allow_queries: bool = True
    rollout_depth: int | None = None  # cap on rollout steps; None = max_depth
    # root pick among tree values: "value" compares all arms flat; "always"
    # attaches the best query to the winning move; "never" strips queries
    ask_policy: str = "value"


@dataclass
class _FastSketch:
    """Scalar-math view of a sketch's models for the hot simulation path."""

    near_w: list
    near_b: list
    bear_w: list
    bear_b: list
    cardinal_cols: dict  # relation -> list p(class | label column)
    centroid: tuple

    @classmethod
    def from_sketch(cls, sk: SketchRecord) -> "_FastSketch":
        cols = {}
        for rel in QUERY_RELATIONS:
            if rel == NEAR:
                continue
            cols[rel] = sk.tables.class_given_label[:, COMPASS_LABELS.index(rel)].tolist()
        c = sk.centroid
        return cls(
            near_w=sk.range_model.near_softmax.weights.tolist(),
            near_b=sk.range_model.near_softmax.biases.tolist(),
            bear_w=sk.bearing_model.weights.tolist(),
            bear_b=sk.bearing_model.biases.tolist(),
            cardinal_cols=cols,
            centroid=(float(c[0]), float(c[1])),
        )


def _softmax_probs(w, b, x, y):
    logits = [wx * x + wy * y + bb for (wx, wy), bb in zip(w, b)]
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    tot = sum(exps)
    return [e / tot for e in exps]


@dataclass
class Codebook:
    """Registered sketches and the query actions they unlock."""

    mode_query: bool = False
    sketches: dict = field(default_factory=dict)
    query_actions: list = field(default_factory=list)
    fast: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.query_actions:
            self.query_actions = [None]
            if self.mode_query:
                self.query_actions.append(MODE_QUERY)


def register_sketch(codebook: Codebook, sketch: SketchRecord,
                    grid: TerrainGrid) -> None:
    """Add a compiled sketch: new query actions plus its terrain tag on the grid."""
    if sketch.label in codebook.sketches:
        raise DuplicateLabel(sketch.label)
    codebook.sketches[sketch.label] = sketch
    codebook.fast[sketch.label] = _FastSketch.from_sketch(sketch)
    for rel in QUERY_RELATIONS:
        codebook.query_actions.append(Query(rel, sketch.label))
    apply_sketch_terrain(grid, sketch.polygon, sketch.delta)


@dataclass(frozen=True)
class ActionPair:
    move: int
    query: Query | None


class _Node:
    __slots__ = ("actions", "counts", "values", "children", "visits")

    def __init__(self):
        self.actions = None  # list[ActionPair], prior-ranked, filled on first visit
        self.counts = None  # list[int]
        self.values = None  # list[float]
        self.children = None  # list[dict obs -> _Node]
        self.visits = 0

    def expand(self, actions):
        n = len(actions)
        self.actions = actions
        self.counts = [0] * n
        self.values = [0.0] * n
        self.children = [None] * n

    def width(self, pw_init: int, pw_rate: float) -> int:
        return min(len(self.actions), pw_init + int(pw_rate * math.sqrt(self.visits)))

    def select(self, k: int, c: float) -> int:
        counts = self.counts
        for i in range(k):
            if counts[i] == 0:
                return i
        logn = math.log(self.visits)
        values = self.values
        best, best_u = 0, -1e18
        for i in range(k):
            u = values[i] + c * math.sqrt(logn / counts[i])
            if u > best_u:
                best, best_u = i, u
        return best


class GenerativeModel:
    """Assumed-model simulator for tree search (scalar fast path).

    Macro steps: one movement action advances the target over the action's
    travel time in a single aggregated draw, checks closest approach against
    the robot's swept path for capture, and samples the end-of-action robot
    observation plus the query answer under the assumed human model.
    """

    def __init__(self, net: RoadNetwork, grid: TerrainGrid, params: WorldParams,
                 config: PlannerConfig, codebook: Codebook, rnd: random.Random):
        self.net = net
        self.grid = grid
        self.params = params
        self.config = config
        self.codebook = codebook
        self.rnd = rnd
        self._routes: dict = {}
        self._alpha = grid.alpha
        self._cell = grid.cell
        self._ncell = grid.alpha.shape[0]
        # coarse nearest-edge lookup so on-road snapping avoids the full scan
        self._snap_cell = params.extent / 40.0
        centers = (np.arange(40) + 0.5) * self._snap_cell
        xx, yy = np.meshgrid(centers, centers)
        eid, _ = net.project_many(np.column_stack([xx.ravel(), yy.ravel()]))
        self._snap_edge = eid.reshape(40, 40)

    def route_geometry(self, start: int, dest: int):
        key = (start, dest)
        geo = self._routes.get(key)
        if geo is None:
            nodes = self.net.nodes
            if dest == start:
                p = (float(nodes[start, 0]), float(nodes[start, 1]))
                geo = ([p], 0.0, None)
            else:
                way = [start] + self.net.route(start, dest)
                pts = [(float(nodes[w, 0]), float(nodes[w, 1])) for w in way]
                total = sum(math.hypot(b[0] - a[0], b[1] - a[1])
                            for a, b in zip(pts, pts[1:]))
                hx, hy = pts[-1][0] - pts[-2][0], pts[-1][1] - pts[-2][1]
                geo = (pts, total, math.atan2(hy, hx))
            self._routes[key] = geo
        return geo

    def duration(self, start: int, dest: int) -> float:
        _, total, _ = self.route_geometry(start, dest)
        return max(1.0, total / self.params.robot_speed)

    def _alpha_at(self, x: float, y: float) -> float:
        ix = int(x / self._cell)
        iy = int(y / self._cell)
        n = self._ncell
        ix = 0 if ix < 0 else (n - 1 if ix >= n else ix)
        iy = 0 if iy < 0 else (n - 1 if iy >= n else iy)
        return float(self._alpha[iy, ix])

    def _p_same_mode(self, mode: int, T: float) -> float:
        """Same-mode probability after T seconds of the two-state chain."""
        a = 1.0 - self.params.mode_stay_prob  # on -> off per second
        off_stay = self.params.offroad_stay_prob
        b = 1.0 - (off_stay if off_stay is not None else self.params.mode_stay_prob)
        if a + b <= 0:
            return 1.0
        lam = (1.0 - a - b) ** T
        if mode == ON_ROAD:
            return b / (a + b) + (a / (a + b)) * lam
        return a / (a + b) + (b / (a + b)) * lam

    def advance_target(self, s, T: float):
        """Aggregated assumed-dynamics update of one scalar target state."""
        x, y, mode, edge, tparam, direction, heading = s
        rnd = self.rnd
        p_same = self._p_same_mode(mode, T)
        if rnd.random() >= p_same:
            mode = 1 - mode
            if mode == OFF_ROAD:
                ex, ey = self.net.edge_unit[edge]
                heading = math.atan2(direction * ey, direction * ex)
            else:
                edge, tparam = self._nearest_edge(x, y)
                direction = 1 if rnd.random() < 0.5 else -1
                ux, uy = self.net.nodes[self.net.edges[edge, 0]]
                ex, ey = self.net.edge_unit[edge]
                x, y = ux + ex * tparam, uy + ey * tparam
        if mode == ON_ROAD:
            speed, sd = self.params.target_road_speed, self.params.target_road_speed_sd
        else:
            speed, sd = self.params.target_offroad_speed, self.params.target_offroad_speed_sd
        disp = max(0.0, rnd.gauss(speed * T, sd * math.sqrt(T))) * self._alpha_at(x, y)
        if mode == OFF_ROAD:
            heading += rnd.gauss(0.0, self.params.heading_walk_sd * math.sqrt(T))
            ext = self.params.extent
            x = min(max(x + disp * math.cos(heading), 0.0), ext)
            y = min(max(y + disp * math.sin(heading), 0.0), ext)
            return (x, y, mode, edge, tparam, direction, heading)
        edge, tparam, direction = self._walk_road(edge, tparam, direction, disp)
        ux, uy = self.net.nodes[self.net.edges[edge, 0]]
        ex, ey = self.net.edge_unit[edge]
        return (ux + ex * tparam, uy + ey * tparam, mode, edge, tparam, direction, heading)

    def _nearest_edge(self, x: float, y: float):
        n = self._snap_edge.shape[0]
        ix = min(max(int(x / self._snap_cell), 0), n - 1)
        iy = min(max(int(y / self._snap_cell), 0), n - 1)
        eid = int(self._snap_edge[iy, ix])
        ux, uy = self.net.nodes[self.net.edges[eid, 0]]
        ex, ey = self.net.edge_unit[eid]
        t = (x - ux) * ex + (y - uy) * ey
        t = min(max(t, 0.0), float(self.net.edge_len[eid]))
        return eid, t

    def _walk_road(self, edge: int, tparam: float, direction: int, rem: float):
        net, rnd = self.net, self.rnd
        for _ in range(32):
            L = float(net.edge_len[edge])
            to_end = (L - tparam) if direction > 0 else tparam
            if rem <= to_end:
                tparam += direction * rem
                return edge, tparam, direction
            rem -= to_end
            node = int(net.edges[edge, 1] if direction > 0 else net.edges[edge, 0])
            deg = int(net.node_degree[node])
            slots = net.node_edge_ids[node]
            if deg > 1:
                arrival = 0
                for i in range(deg):
                    if slots[i] == edge:
                        arrival = i
                        break
                pick = int(rnd.random() * (deg - 1))
                if pick >= arrival:
                    pick += 1
            else:
                pick = 0
            edge = int(slots[pick])
            if int(net.edges[edge, 0]) == node:
                direction, tparam = 1, 0.0
            else:
                direction, tparam = -1, float(net.edge_len[edge])
        return edge, tparam, direction

    def _path_distance(self, pts, x: float, y: float) -> float:
        if len(pts) == 1:
            return math.hypot(x - pts[0][0], y - pts[0][1])
        best = float("inf")
        for (ax, ay), (bx, by) in zip(pts, pts[1:]):
            dx, dy = bx - ax, by - ay
            L2 = dx * dx + dy * dy
            t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((x - ax) * dx + (y - ay) * dy) / L2))
            px, py = ax + t * dx, ay + t * dy
            d = math.hypot(x - px, y - py)
            if d < best:
                best = d
        return best

    def query_yes_probability(self, query: Query, x: float, y: float, mode: int) -> float:
        if query.relation == MODE_RELATION:
            return 1.0 if mode == OFF_ROAD else 0.0
        fast = self.codebook.fast[query.label]
        if query.relation == NEAR:
            return _softmax_probs(fast.near_w, fast.near_b, x, y)[0]
        probs = _softmax_probs(fast.bear_w, fast.bear_b, x, y)
        col = fast.cardinal_cols[query.relation]
        return sum(p * c for p, c in zip(probs, col))

    def step(self, s, robot_node: int, robot_heading: float, action: ActionPair):
        """One macro transition. Returns (s', (o_r, o_h), reward, node', heading', dur, terminal)."""
        pts, total, end_heading = self.route_geometry(robot_node, action.move)
        if end_heading is None:
            end_heading = robot_heading
        dur = max(1.0, total / self.params.robot_speed)
        s2 = self.advance_target(s, dur)
        x, y = s2[0], s2[1]
        tau = self.params.capture_radius
        if self._path_distance(pts, x, y) <= tau:
            return s2, (OBS_CAPTURED, ANSWER_NULL), 100.0, action.move, end_heading, dur, True
        rx, ry = pts[-1]
        d = math.hypot(x - rx, y - ry)
        ang = math.atan2(y - ry, x - rx)
        dang = abs((ang - end_heading + math.pi) % (2 * math.pi) - math.pi)
        rnd = self.rnd
        if dang <= self.params.cone_half_angle:
            p_det = self.params.sensor_accuracy if tau < d <= 2 * tau \
                else 1.0 - self.params.sensor_accuracy
        else:
            p_det = 0.0
        o_r = OBS_DETECTED if rnd.random() < p_det else OBS_NONE
        o_h = ANSWER_NULL
        reward = 0.0
        if action.query is not None:
            reward = -1.0
            if rnd.random() < self.config.assumed_xi:
                p_yes = self.query_yes_probability(action.query, x, y, s2[2])
                eta = self.config.assumed_eta
                p_yes = eta * p_yes + (1.0 - eta) * (1.0 - p_yes)
                o_h = ANSWER_YES if rnd.random() < p_yes else ANSWER_NO
        return s2, (o_r, o_h), reward, action.move, end_heading, dur, False


class Planner:
    """One POMCP planner bound to a codebook, assumed grid, and road network."""

    def __init__(self, net: RoadNetwork, assumed_grid: TerrainGrid,
                 params: WorldParams, config: PlannerConfig,
                 codebook: Codebook | None = None, seed: int = 0):
        self.net = net
        self.grid = assumed_grid
        self.params = params
        self.config = config
        self.codebook = codebook if codebook is not None else Codebook(config.mode_query)
        self.rnd = random.Random(seed)
        self.np_rng = np.random.default_rng(seed)
        self.gen = GenerativeModel(net, assumed_grid, params, config, self.codebook, self.rnd)
        self._moves_cache: dict[int, list[int]] = {}
        self._ranked_cache: dict = {}

    # -- action space -------------------------------------------------------

    def _moves(self, node: int) -> list[int]:
        m = self._moves_cache.get(node)
        if m is None:
            m = self.net.legal_moves(node)
            self._moves_cache[node] = m
        return m

    def legal_actions(self, node: int) -> list[ActionPair]:
        queries = self.codebook.query_actions if self.config.allow_queries else [None]
        return [ActionPair(m, q) for m in self._moves(node) for q in queries]

    def _bandit_actions(self, node: int, ref, depth: int) -> list[ActionPair]:
        """Arms actually offered to the bandit at this tree node."""
        bx, by = int(ref[0] // 125), int(ref[1] // 125)
        moves = self._ranked_moves(node, bx, by)
        no_queries = (depth > 0 and not self.config.tree_queries) \
            or not self.config.allow_queries or len(self.codebook.query_actions) <= 1
        if no_queries:
            return moves
        return moves + self._ranked_queries(moves, bx, by, self.config.pw_query_max)

    def _ranked_moves(self, node: int, bx: int, by: int) -> list[ActionPair]:
        key = (node, bx, by)
        cached = self._ranked_cache.get(key)
        if cached is not None:
            return cached
        rx, ry = (bx + 0.5) * 125.0, (by + 0.5) * 125.0
        nodes = self.net.nodes
        moves = [(math.hypot(nodes[m, 0] - rx, nodes[m, 1] - ry), m)
                 for m in self._moves(node)]
        moves.sort(key=lambda t: t[0])
        ranked = [ActionPair(m, None) for _, m in moves]
        self._ranked_cache[key] = ranked
        return ranked

    def _ranked_queries(self, moves: list[ActionPair], bx: int, by: int,
                        limit: int) -> list[ActionPair]:
        """Top `limit` query pairs by combined move/sketch proximity."""
        rx, ry = (bx + 0.5) * 125.0, (by + 0.5) * 125.0
        nodes = self.net.nodes
        qscored = []
        for q in self.codebook.query_actions:
            if q is None:
                continue
            if q.relation == MODE_RELATION:
                qscored.append((800.0, q))
            else:
                c = self.codebook.fast[q.label].centroid
                qscored.append((20.0 + math.hypot(c[0] - rx, c[1] - ry) * 0.4, q))
        pairs = []
        for a in moves:
            d = math.hypot(nodes[a.move, 0] - rx, nodes[a.move, 1] - ry)
            for qs, q in qscored:
                pairs.append((d + qs, ActionPair(a.move, q)))
        pairs.sort(key=lambda t: t[0])
        return [a for _, a in pairs[:limit]]

    def ranked_actions(self, node: int, ref) -> list[ActionPair]:
        """Legal pairs ordered by prior: distance-ranked null-query moves, then
        every query pair by combined move/sketch proximity."""
        bx, by = int(ref[0] // 125), int(ref[1] // 125)
        moves = self._ranked_moves(node, bx, by)
        return moves + self._ranked_queries(moves, bx, by, limit=10 ** 9)

    # -- core search --------------------------------------------------------

    def search(self, belief: ParticleBelief, robot_node: int, robot_heading: float,
               t_remaining: float, budget: int | None = None):
        """Run `budget` simulations from the belief; returns (ActionPair, info)."""
        if len(belief) == 0:
            raise EmptyBelief("cannot plan from an empty belief")
        budget = self.config.simulations if budget is None else int(budget)
        root = _Node()
        root.expand(self._bandit_actions(robot_node, belief.mean_position(), 0))
        if budget > 0:
            picks = self.np_rng.choice(len(belief), size=budget, p=belief.weights)
        else:
            picks = []
        st = belief.states
        for i in picks:
            s = (float(st.pos[i, 0]), float(st.pos[i, 1]), int(st.mode[i]),
                 int(st.edge[i]), float(st.tparam[i]), int(st.direction[i]),
                 float(st.heading[i]))
            self._simulate(s, root, robot_node, robot_heading, t_remaining, 0)
        best, best_v = 0, -1e18
        for i, (v, c) in enumerate(zip(root.values, root.counts)):
            if c > 0 and v > best_v:
                best, best_v = i, v
        chosen = root.actions[best]
        if self.config.ask_policy == "never" and chosen.query is not None:
            chosen = ActionPair(chosen.move, None)
        elif self.config.ask_policy == "always" and chosen.query is None \
                and len(self.codebook.query_actions) > 1 and self.config.allow_queries:
            bx, by = int(belief.mean_position()[0] // 125), int(belief.mean_position()[1] // 125)
            q = self._ranked_queries([chosen], bx, by, 1)
            if q:
                chosen = q[0]
        info = {
            "root_values": {self._akey(a): float(v) for a, v, c in
                            zip(root.actions, root.values, root.counts) if c > 0},
            "root_visits": {self._akey(a): int(c) for a, c in
                            zip(root.actions, root.counts) if c > 0},
            "simulations": int(budget),
        }
        return chosen, info

    @staticmethod
    def _akey(a: ActionPair) -> str:
        if a.query is None:
            return f"m{a.move}"
        if a.query.relation == MODE_RELATION:
            return f"m{a.move}|mode"
        return f"m{a.move}|{a.query.relation}:{a.query.label}"

    def _simulate(self, s, node: _Node, robot_node: int, robot_heading: float,
                  t_left: float, depth: int) -> float:
        if depth >= self.config.max_depth or t_left <= 0:
            return 0.0
        if node.actions is None:
            node.expand(self._bandit_actions(robot_node, (s[0], s[1]), depth))
        node.visits += 1
        k = node.width(self.config.pw_init, self.config.pw_rate)
        ai = node.select(k, self.config.uct_c)
        action = node.actions[ai]
        s2, obs, r, node2, heading2, dur, terminal = self.gen.step(
            s, robot_node, robot_heading, action)
        if terminal or t_left - dur <= 0:
            ret = r
        else:
            kids = node.children[ai]
            if kids is None:
                kids = node.children[ai] = {}
            child = kids.get(obs)
            if child is None:
                kids[obs] = _Node()
                ret = r + self.config.gamma * self._rollout(
                    s2, node2, heading2, t_left - dur, depth + 1)
            else:
                ret = r + self.config.gamma * self._simulate(
                    s2, child, node2, heading2, t_left - dur, depth + 1)
        node.counts[ai] += 1
        node.values[ai] += (ret - node.values[ai]) / node.counts[ai]
        return ret

    def _rollout(self, s, robot_node: int, robot_heading: float, t_left: float,
                 depth: int) -> float:
        g, disc = 0.0, 1.0
        horizon = self.config.max_depth
        if self.config.rollout_depth is not None:
            horizon = min(horizon, depth + self.config.rollout_depth)
        while depth < horizon and t_left > 0:
            moves = self._moves(robot_node)
            action = ActionPair(moves[self.rnd.randrange(len(moves))], None)
            s, _, r, robot_node, robot_heading, dur, terminal = self.gen.step(
                s, robot_node, robot_heading, action)
            g += disc * r
            if terminal:
                break
            disc *= self.config.gamma
            t_left -= dur
            depth += 1
        return g

    # -- predictive planning -------------------------------------------------

    def observation_distribution(self, belief: ParticleBelief, action: ActionPair,
                                 robot_node: int, rng: np.random.Generator
                                 ) -> np.ndarray:
        """p(o_r | b, a): per-particle sense likelihoods after simulating the
        action's motion, mixed by particle weight. Sums to one."""
        pts, _, end_heading = self.gen.route_geometry(robot_node, action.move)
        dur = self.gen.duration(robot_node, action.move)
        sim = belief.copy()
        sim.predict(dur, self.grid, self.net, rng, self.params)
        heading = end_heading if end_heading is not None else 0.0
        lik = sense_likelihood_many(np.asarray(pts[-1]), heading, sim.states.pos,
                                    self.params)
        return belief.weights @ lik

    def predictive_plan(self, belief: ParticleBelief, action: ActionPair,
                        robot_node: int, t_remaining: float,
                        rng: np.random.Generator):
        """Pre-solve one search per robot observation, budgets proportional to
        p(o|b,a); returns ({obs: ActionPair}, info)."""
        probs = self.observation_distribution(belief, action, robot_node, rng)
        total = self.config.simulations
        raw = probs * total
        budgets = np.floor(raw).astype(int)
        rem = total - budgets.sum()
        if rem > 0:  # largest remainder keeps the split within one granule
            order = np.argsort(-(raw - budgets))
            budgets[order[:rem]] += 1
        pts, _, end_heading = self.gen.route_geometry(robot_node, action.move)
        dur = self.gen.duration(robot_node, action.move)
        heading = end_heading if end_heading is not None else 0.0
        end_pos = np.asarray(pts[-1])
        branch: dict = {}
        info = {"obs_probs": {o: float(p) for o, p in zip(ROBOT_OBSERVATIONS, probs)},
                "budgets": {o: int(b) for o, b in zip(ROBOT_OBSERVATIONS, budgets)}}
        base = belief.copy()
        base.predict(dur, self.grid, self.net, rng, self.params)
        lik = sense_likelihood_many(end_pos, heading, base.states.pos, self.params)
        for oi, obs in enumerate(ROBOT_OBSERVATIONS):
            if budgets[oi] <= 0:
                continue
            b_o = base.copy()
            try:
                b_o.update_weights(lik[:, oi].copy(), self.net, rng)
            except Exception:
                continue
            act, sinfo = self.search(b_o, action.move, heading,
                                     t_remaining - dur, budget=int(budgets[oi]))
            branch[obs] = act
            info[f"branch_{obs}"] = sinfo["root_values"]
        return branch, info

    def blind_plan(self, belief: ParticleBelief, action: ActionPair,
                   robot_node: int, t_remaining: float,
                   rng: np.random.Generator) -> ActionPair:
        """Dynamics-only pre-plan: same look-ahead belief, no measurement branch."""
        dur = self.gen.duration(robot_node, action.move)
        pts, _, end_heading = self.gen.route_geometry(robot_node, action.move)
        heading = end_heading if end_heading is not None else 0.0
        b = belief.copy()
        b.predict(dur, self.grid, self.net, rng, self.params)
        act, _ = self.search(b, action.move, heading, t_remaining - dur)
        return act
