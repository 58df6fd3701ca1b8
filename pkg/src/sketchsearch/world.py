"""Road-network search environment: dynamics, sensing, terrain, and maps.

The target random-walks over a road graph with a discrete on/off-road mode
switching its speed model; the robot travels node-to-node and carries a
conical proximity sensor with three range bands. One vectorized kernel
advances any number of target states at once, so the ground truth (batch of
one) and the particle filter share the exact same transition code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import ConvexPolygon, contains_many

ON_ROAD = 0
OFF_ROAD = 1

OBS_NONE = "none"
OBS_DETECTED = "detected"
OBS_CAPTURED = "captured"
ROBOT_OBSERVATIONS = (OBS_NONE, OBS_DETECTED, OBS_CAPTURED)


class IllegalMove(ValueError):
    """Movement action outside the neighbors-of-neighbors set."""


@dataclass(frozen=True)
class WorldParams:
    extent: float = 1000.0  # square map side, meters
    robot_speed: float = 15.0
    robot_speed_sd: float = 1.0
    target_road_speed: float = 20.0
    target_road_speed_sd: float = 5.0
    target_offroad_speed: float = 5.0
    target_offroad_speed_sd: float = 1.0
    mode_stay_prob: float = 0.95  # per second, on-road
    offroad_stay_prob: float | None = None  # per second; None mirrors mode_stay_prob
    heading_walk_sd: float = 0.4  # rad / sqrt(s), off-road heading diffusion
    capture_radius: float = 75.0  # tau
    cone_half_angle: float = math.radians(15.0)
    sensor_accuracy: float = 0.98
    t_max: float = 600.0
    terrain_cell: float = 10.0
    spawn_min_distance: float = 350.0  # target starts at least this far from the robot

    @property
    def speeds(self) -> np.ndarray:
        return np.array([self.target_road_speed, self.target_offroad_speed])

    @property
    def speed_sds(self) -> np.ndarray:
        return np.array([self.target_road_speed_sd, self.target_offroad_speed_sd])


# ---------------------------------------------------------------------------
# road network


@dataclass
class RoadNetwork:
    nodes: np.ndarray  # (V, 2)
    edges: np.ndarray  # (E, 2) int, u < v not required
    landmarks: list  # [(name, (x, y))]
    extent: float = 1000.0

    # derived, filled by __post_init__
    edge_vec: np.ndarray = field(default=None, repr=False)
    edge_len: np.ndarray = field(default=None, repr=False)
    edge_unit: np.ndarray = field(default=None, repr=False)
    node_edge_ids: np.ndarray = field(default=None, repr=False)  # (V, maxdeg), -1 pad
    node_degree: np.ndarray = field(default=None, repr=False)
    terrain_regions: list = field(default_factory=list)  # [(delta, ConvexPolygon)]

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.edges = np.asarray(self.edges, dtype=np.int64)
        u, v = self.nodes[self.edges[:, 0]], self.nodes[self.edges[:, 1]]
        self.edge_vec = v - u
        self.edge_len = np.hypot(self.edge_vec[:, 0], self.edge_vec[:, 1])
        self.edge_unit = self.edge_vec / self.edge_len[:, None]
        adj: list[list[int]] = [[] for _ in range(len(self.nodes))]
        for eid, (a, b) in enumerate(self.edges):
            adj[a].append(eid)
            adj[b].append(eid)
        maxdeg = max(len(a) for a in adj)
        self.node_edge_ids = np.full((len(self.nodes), maxdeg), -1, dtype=np.int64)
        self.node_degree = np.array([len(a) for a in adj], dtype=np.int64)
        for n, eids in enumerate(adj):
            self.node_edge_ids[n, :len(eids)] = eids

    # -- graph queries ------------------------------------------------------

    def neighbors(self, n: int) -> list[int]:
        out = []
        for eid in self.node_edge_ids[n]:
            if eid < 0:
                break
            a, b = self.edges[eid]
            out.append(int(b if a == n else a))
        return out

    def legal_moves(self, n: int) -> list[int]:
        """Current node, its neighbors, and neighbors-of-neighbors."""
        seen = {n}
        for k in self.neighbors(n):
            seen.add(k)
            seen.update(self.neighbors(k))
        return sorted(seen)

    def route(self, start: int, dest: int) -> list[int]:
        """Waypoints (excluding start) to a legal destination."""
        if dest == start:
            return []
        nbrs = self.neighbors(start)
        if dest in nbrs:
            return [dest]
        best = None
        for via in nbrs:
            if dest in self.neighbors(via):
                d = (np.linalg.norm(self.nodes[start] - self.nodes[via])
                     + np.linalg.norm(self.nodes[via] - self.nodes[dest]))
                if best is None or d < best[0]:
                    best = (d, via)
        if best is None:
            raise IllegalMove(f"node {dest} is not within two hops of {start}")
        return [best[1], dest]

    def route_length(self, start: int, dest: int) -> float:
        pts = [self.nodes[start]] + [self.nodes[w] for w in self.route(start, dest)]
        return float(sum(np.linalg.norm(b - a) for a, b in zip(pts, pts[1:])))

    def nearest_node(self, p) -> int:
        d = np.hypot(self.nodes[:, 0] - p[0], self.nodes[:, 1] - p[1])
        return int(np.argmin(d))

    def edge_point(self, edge: int, tparam: float) -> np.ndarray:
        u = self.nodes[self.edges[edge, 0]]
        return u + self.edge_unit[edge] * tparam

    def project_many(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest edge id and along-edge parameter for each point."""
        u = self.nodes[self.edges[:, 0]]  # (E, 2)
        rel = pts[:, None, :] - u[None, :, :]  # (N, E, 2)
        t = np.einsum("nek,ek->ne", rel, self.edge_unit)
        t = np.clip(t, 0.0, self.edge_len[None, :])
        foot = u[None, :, :] + t[..., None] * self.edge_unit[None, :, :]
        d2 = ((pts[:, None, :] - foot) ** 2).sum(axis=2)
        eid = d2.argmin(axis=1)
        return eid.astype(np.int64), t[np.arange(len(pts)), eid]

    def total_road_length(self) -> float:
        return float(self.edge_len.sum())


# ---------------------------------------------------------------------------
# map file IO: [nodes] / [edges] / [landmarks] sections (+ optional [terrain])


def parse_map(text: str, extent: float = 1000.0) -> RoadNetwork:
    section = None
    nodes, edges, landmarks, terrain = {}, [], [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].lower()
            continue
        parts = line.split()
        if section == "nodes":
            nodes[int(parts[0])] = (float(parts[1]), float(parts[2]))
        elif section == "edges":
            edges.append((int(parts[0]), int(parts[1])))
        elif section == "landmarks":
            landmarks.append((parts[0], (float(parts[1]), float(parts[2]))))
        elif section == "terrain":
            delta = float(parts[0])
            coords = np.array(parts[1:], dtype=float).reshape(-1, 2)
            terrain.append((delta, ConvexPolygon(coords)))
        else:
            raise ValueError(f"line outside a known section: {raw!r}")
    ordered = [nodes[i] for i in sorted(nodes)]
    net = RoadNetwork(np.array(ordered), np.array(edges), landmarks, extent=extent)
    net.terrain_regions = terrain
    return net


def load_map(path) -> RoadNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read())


def dump_map(net: RoadNetwork) -> str:
    lines = ["[nodes]"]
    for i, (x, y) in enumerate(net.nodes):
        lines.append(f"{i} {x:.3f} {y:.3f}")
    lines.append("[edges]")
    for a, b in net.edges:
        lines.append(f"{a} {b}")
    lines.append("[landmarks]")
    for name, (x, y) in net.landmarks:
        lines.append(f"{name} {x:.3f} {y:.3f}")
    if net.terrain_regions:
        lines.append("[terrain]")
        for delta, poly in net.terrain_regions:
            coords = " ".join(f"{c:.3f}" for c in poly.vertices.ravel())
            lines.append(f"{delta} {coords}")
    return "\n".join(lines) + "\n"


def default_map_path() -> str:
    from importlib import resources

    return str(resources.files("sketchsearch").joinpath("assets/default_map.txt"))


_DEFAULT_NET = None


def default_network() -> RoadNetwork:
    global _DEFAULT_NET
    if _DEFAULT_NET is None:
        _DEFAULT_NET = load_map(default_map_path())
    return _DEFAULT_NET


# ---------------------------------------------------------------------------
# terrain grid


@dataclass
class TerrainGrid:
    extent: float = 1000.0
    cell: float = 10.0
    alpha: np.ndarray = None

    def __post_init__(self):
        n = int(round(self.extent / self.cell))
        if self.alpha is None:
            self.alpha = np.ones((n, n))

    def copy(self) -> "TerrainGrid":
        return TerrainGrid(self.extent, self.cell, self.alpha.copy())

    def lookup_many(self, pts: np.ndarray) -> np.ndarray:
        n = self.alpha.shape[0]
        ix = np.clip((pts[:, 0] / self.cell).astype(np.int64), 0, n - 1)
        iy = np.clip((pts[:, 1] / self.cell).astype(np.int64), 0, n - 1)
        return self.alpha[iy, ix]

    def lookup(self, p) -> float:
        return float(self.lookup_many(np.asarray(p, dtype=float).reshape(1, 2))[0])

    def cell_centers(self) -> np.ndarray:
        n = self.alpha.shape[0]
        c = (np.arange(n) + 0.5) * self.cell
        xx, yy = np.meshgrid(c, c)
        return np.column_stack([xx.ravel(), yy.ravel()])


def apply_sketch_terrain(grid: TerrainGrid, polygon: ConvexPolygon,
                         delta: float | None) -> TerrainGrid:
    """Set alpha to delta on every cell whose center lies in the polygon.

    Untagged sketches (delta None) leave the grid alone; overlapping sketches
    are last-writer-wins.
    """
    if delta is None:
        return grid
    if delta <= 0:
        raise ValueError("terrain multiplier must be positive")
    centers = grid.cell_centers()
    mask = contains_many(polygon, centers).reshape(grid.alpha.shape)
    grid.alpha[mask] = delta
    return grid


# ---------------------------------------------------------------------------
# target state and the shared transition kernel


@dataclass
class TargetState:
    x: float
    y: float
    mode: int = ON_ROAD
    edge: int = 0
    tparam: float = 0.0
    direction: int = 1
    heading: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class TargetArrays:
    """Struct-of-arrays form used by both the world and the particle filter."""

    pos: np.ndarray  # (N, 2)
    mode: np.ndarray  # (N,) int8
    edge: np.ndarray  # (N,) int64
    tparam: np.ndarray  # (N,)
    direction: np.ndarray  # (N,) int8 (+1 along u->v)
    heading: np.ndarray  # (N,)

    def copy(self) -> "TargetArrays":
        return TargetArrays(self.pos.copy(), self.mode.copy(), self.edge.copy(),
                            self.tparam.copy(), self.direction.copy(), self.heading.copy())

    def __len__(self) -> int:
        return len(self.mode)

    def take(self, idx) -> "TargetArrays":
        return TargetArrays(self.pos[idx], self.mode[idx], self.edge[idx],
                            self.tparam[idx], self.direction[idx], self.heading[idx])


def state_to_arrays(t: TargetState) -> TargetArrays:
    return TargetArrays(
        pos=np.array([[t.x, t.y]]),
        mode=np.array([t.mode], dtype=np.int8),
        edge=np.array([t.edge], dtype=np.int64),
        tparam=np.array([t.tparam], dtype=float),
        direction=np.array([t.direction], dtype=np.int8),
        heading=np.array([t.heading], dtype=float),
    )


def arrays_to_state(a: TargetArrays, i: int = 0) -> TargetState:
    return TargetState(float(a.pos[i, 0]), float(a.pos[i, 1]), int(a.mode[i]),
                       int(a.edge[i]), float(a.tparam[i]), int(a.direction[i]),
                       float(a.heading[i]))


def advance_targets(a: TargetArrays, dt: float, grid: TerrainGrid,
                    net: RoadNetwork, rng: np.random.Generator,
                    params: WorldParams) -> None:
    """One transition step, in place, for every target state in `a`.

    Mode flips with probability 1 - stay^dt, displacement is a truncated
    Gaussian scaled by the terrain multiplier at the pre-step position,
    on-road states walk the graph (uniform choice among continuing edges at
    nodes), off-road states diffuse their heading.
    """
    if dt <= 0:
        return
    n = len(a)
    stay_on = params.mode_stay_prob
    stay_off = params.offroad_stay_prob if params.offroad_stay_prob is not None else stay_on
    flip_p = np.where(a.mode == ON_ROAD, 1.0 - stay_on ** dt, 1.0 - stay_off ** dt)
    flips = rng.random(n) < flip_p
    new_mode = np.where(flips, 1 - a.mode, a.mode).astype(np.int8)

    to_road = flips & (new_mode == ON_ROAD)
    to_open = flips & (new_mode == OFF_ROAD)
    if to_open.any():
        # leave the road along the current travel direction
        ang = np.arctan2(a.direction * net.edge_unit[a.edge][:, 1],
                         a.direction * net.edge_unit[a.edge][:, 0])
        a.heading[to_open] = ang[to_open]
    if to_road.any():
        eid, t = net.project_many(a.pos[to_road])
        a.edge[to_road] = eid
        a.tparam[to_road] = t
        a.direction[to_road] = np.where(rng.random(to_road.sum()) < 0.5, 1, -1).astype(np.int8)
        u = net.nodes[net.edges[eid, 0]]
        a.pos[to_road] = u + net.edge_unit[eid] * t[:, None]
    a.mode = new_mode

    alpha = grid.lookup_many(a.pos)
    speed = params.speeds[a.mode]
    sd = params.speed_sds[a.mode]
    disp = np.maximum(0.0, rng.normal(speed * dt, sd * dt)) * alpha

    off = a.mode == OFF_ROAD
    if off.any():
        a.heading[off] = a.heading[off] + rng.normal(
            0.0, params.heading_walk_sd * math.sqrt(dt), off.sum())
        a.pos[off, 0] += disp[off] * np.cos(a.heading[off])
        a.pos[off, 1] += disp[off] * np.sin(a.heading[off])
        np.clip(a.pos[off], 0.0, params.extent, out=a.pos[off])

    on = ~off
    if on.any():
        _advance_on_road(a, on, disp, net, rng)


def _advance_on_road(a: TargetArrays, on: np.ndarray, disp: np.ndarray,
                     net: RoadNetwork, rng: np.random.Generator) -> None:
    rem = np.where(on, disp, 0.0)
    for _ in range(32):  # bounded: each pass consumes one edge segment
        active = rem > 1e-12
        if not active.any():
            break
        idx = np.flatnonzero(active)
        edge = a.edge[idx]
        L = net.edge_len[edge]
        fwd = a.direction[idx] > 0
        to_end = np.where(fwd, L - a.tparam[idx], a.tparam[idx])
        step = np.minimum(rem[idx], to_end)
        a.tparam[idx] = a.tparam[idx] + a.direction[idx] * step
        rem[idx] -= step
        arrived = rem[idx] > 1e-12  # hit the node with distance to spare
        if not arrived.any():
            break
        aidx = idx[arrived]
        edge_a = a.edge[aidx]
        node = np.where(a.direction[aidx] > 0, net.edges[edge_a, 1], net.edges[edge_a, 0])
        deg = net.node_degree[node]
        slots = net.node_edge_ids[node]  # (k, maxdeg)
        arrival_slot = (slots == edge_a[:, None]).argmax(axis=1)
        u = rng.random(len(aidx))
        # uniform among continuing edges; dead ends turn back
        pick = np.floor(u * np.maximum(deg - 1, 1)).astype(np.int64)
        pick = np.where(deg > 1, pick + (pick >= arrival_slot), arrival_slot)
        new_edge = slots[np.arange(len(aidx)), pick]
        leaves_from_u = net.edges[new_edge, 0] == node
        a.edge[aidx] = new_edge
        a.direction[aidx] = np.where(leaves_from_u, 1, -1).astype(np.int8)
        a.tparam[aidx] = np.where(leaves_from_u, 0.0, net.edge_len[new_edge])
    onidx = np.flatnonzero(on)
    u = net.nodes[net.edges[a.edge[onidx], 0]]
    a.pos[onidx] = u + net.edge_unit[a.edge[onidx]] * a.tparam[onidx, None]


def step_target(t: TargetState, dt: float, grid: TerrainGrid, net: RoadNetwork,
                rng: np.random.Generator, params: WorldParams) -> TargetState:
    """Single ground-truth transition: batch-of-one call into the shared kernel."""
    a = state_to_arrays(t)
    advance_targets(a, dt, grid, net, rng, params)
    return arrays_to_state(a)


def random_road_state(net: RoadNetwork, rng: np.random.Generator) -> TargetState:
    """Uniform-by-length road point, on-road mode, random travel direction."""
    p = net.edge_len / net.edge_len.sum()
    edge = int(rng.choice(len(net.edges), p=p))
    t = float(rng.uniform(0.0, net.edge_len[edge]))
    pos = net.edge_point(edge, t)
    direction = 1 if rng.random() < 0.5 else -1
    heading = math.atan2(net.edge_unit[edge, 1] * direction, net.edge_unit[edge, 0] * direction)
    return TargetState(float(pos[0]), float(pos[1]), ON_ROAD, edge, t, direction, heading)


# ---------------------------------------------------------------------------
# robot


@dataclass
class RobotState:
    x: float
    y: float
    heading: float
    node: int
    route: tuple = ()  # remaining waypoint node ids

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def begin_move(r: RobotState, dest: int, net: RoadNetwork) -> RobotState:
    if dest not in net.legal_moves(r.node):
        raise IllegalMove(f"{dest} not reachable within two hops of {r.node}")
    return replace(r, route=tuple(net.route(r.node, dest)))


def step_robot(r: RobotState, dt: float, net: RoadNetwork,
               rng: np.random.Generator, params: WorldParams) -> tuple[RobotState, bool]:
    """Advance along the current route; returns (state, action_complete)."""
    if not r.route:
        return r, True
    travel = max(0.0, rng.normal(params.robot_speed, params.robot_speed_sd)) * dt
    x, y, heading, node = r.x, r.y, r.heading, r.node
    route = list(r.route)
    while travel > 0 and route:
        tx, ty = net.nodes[route[0]]
        dx, dy = tx - x, ty - y
        d = math.hypot(dx, dy)
        if d <= travel:
            x, y = tx, ty
            node = route.pop(0)
            travel -= d
            if d > 0:
                heading = math.atan2(dy, dx)
        else:
            x += travel / d * dx
            y += travel / d * dy
            heading = math.atan2(dy, dx)
            travel = 0.0
    return RobotState(x, y, heading, node, tuple(route)), not route


# ---------------------------------------------------------------------------
# sensing and reward


def sense_likelihood_many(robot_pos, robot_heading: float, pts: np.ndarray,
                          params: WorldParams) -> np.ndarray:
    """(N, 3) likelihood over (none, detected, captured) for each target state.

    States outside the viewcone yield 'none' with probability one; in-cone
    states get the accuracy mass on their range band and the remainder split
    over the other two outcomes.
    """
    rel = pts - np.asarray(robot_pos, dtype=float)[None, :]
    dist = np.hypot(rel[:, 0], rel[:, 1])
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    dang = np.abs((ang - robot_heading + math.pi) % (2 * math.pi) - math.pi)
    in_cone = dang <= params.cone_half_angle
    tau = params.capture_radius
    band = np.where(dist <= tau, 2, np.where(dist <= 2 * tau, 1, 0))
    acc = params.sensor_accuracy
    out = np.full((len(pts), 3), (1.0 - acc) / 2.0)
    out[np.arange(len(pts)), band] = acc
    out[~in_cone] = (1.0, 0.0, 0.0)
    return out


def sense(robot: RobotState, target_pos, rng: np.random.Generator,
          params: WorldParams) -> str:
    lik = sense_likelihood_many(robot.position, robot.heading,
                                np.asarray(target_pos, dtype=float).reshape(1, 2), params)[0]
    return ROBOT_OBSERVATIONS[int(rng.choice(3, p=lik))]


def reward(target_pos, robot_pos, a_q, tau: float = 75.0) -> float:
    """Piecewise capture/query reward (capture 100, idle 0, query -1)."""
    d = math.hypot(target_pos[0] - robot_pos[0], target_pos[1] - robot_pos[1])
    if d <= tau:
        return 100.0
    return 0.0 if a_q is None else -1.0


def glimpse(target_pos, noise: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy oracle position report (stand-in for remote camera sightings)."""
    return np.asarray(target_pos, dtype=float) + rng.normal(0.0, noise, 2)
