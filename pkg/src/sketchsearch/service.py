"""Live session gateway: one websocket drives one episode with a human in the loop.

Text frames (one JSON message per frame, schema in PROTOCOL.md) carry
telemetry and query prompts to the client and sketches, statements, and
answers back. The engine runs in a worker thread with wall-clock pacing;
client input is queued onto the engine tick, query prompts expire to a Null
answer at their deadline, and a disconnected client simply degrades the
session to no-human behavior. Every input lands in the episode log with its
arrival tick, so a session replays headlessly.
"""

from __future__ import annotations

import itertools
import json
import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .episode import EpisodeConfig, EngineView, run_episode
from .planner import PlannerConfig
from .queries import ANSWER_NULL, STATEMENT_RELATIONS, Query, Statement
from .sim_human import MODE_ACTIVE, MODE_BOTH, MODE_PASSIVE
from .world import RoadNetwork, WorldParams

PROTOCOL_VERSION = 1
HEARTBEAT_SECONDS = 5.0
TELEMETRY_QUEUE_LIMIT = 64  # bounded; oldest frames drop first
BELIEF_POINTS = 500

ANSWER_ALIASES = {"yes": "yes", "no": "no", "idontknow": "null", "idk": "null",
                  "null": "null"}


@dataclass
class ServiceConfig:
    mode: str = MODE_BOTH
    pace: float = 1.0  # wall seconds per simulated second
    episode: EpisodeConfig = field(default_factory=lambda: EpisodeConfig(
        n_particles=1500,
        planner=PlannerConfig(simulations=300, max_depth=10)))
    session_dir: str = "sessions"
    preset: str = "sim"  # sim: 600 s, study: 900 s

    def episode_config(self, seed: int) -> EpisodeConfig:
        cfg = replace(self.episode, seed=seed, human=None)
        if self.preset == "study":
            cfg = replace(cfg, world=replace(cfg.world, t_max=900.0))
        return cfg


class LiveHuman:
    """Engine-side adapter for a remote human: client frames in, prompts out."""

    def __init__(self, session: "Session"):
        self.session = session
        self.mode = session.config.mode
        self._query_ids = itertools.count(1)
        self.pending: tuple[int, Query, float] | None = None  # id, query, deadline tick

    # engine interface ------------------------------------------------------

    def observe_glimpse(self, pos) -> None:
        self.session.glimpses.append([float(pos[0]), float(pos[1])])

    def maybe_sketch(self, t, _pos):
        return None  # sketches arrive through poll()

    def maybe_statement(self, t, _pos, _codebook):
        return None

    def answer(self, query: Query, _pos, _mode, _codebook, t: float = 0.0):
        if self.mode == MODE_PASSIVE:
            return ANSWER_NULL  # never prompt a passive-mode subject
        qid = next(self._query_ids)
        deadline = t + self.session.episode_cfg.query_deadline
        self.pending = (qid, query, deadline)
        self.session.send({"type": "query", "v": PROTOCOL_VERSION, "id": qid,
                           "relation": query.relation, "label": query.label,
                           "text": query.text(), "deadline_t": deadline})
        return None  # answered asynchronously via poll()

    def poll(self, t):
        events = []
        while True:
            try:
                frame = self.session.inbox.get_nowait()
            except queue.Empty:
                break
            events.extend(self._handle(frame, t))
        if self.pending is not None and t >= self.pending[2]:
            self.session.send({"type": "query_expired", "id": self.pending[0]})
            self.pending = None
        return events

    # frame handling ---------------------------------------------------------

    def _handle(self, frame: dict, t: float) -> list:
        kind = frame.get("type")
        if kind == "sketch":
            return self._handle_sketch(frame)
        if kind == "statement":
            return self._handle_statement(frame)
        if kind == "answer":
            return self._handle_answer(frame, t)
        if kind == "snapshot_request":
            self.session.send_snapshot()
            return []
        self.session.send_error("unknown_type", f"unknown frame type {kind!r}")
        return []

    def _handle_sketch(self, frame: dict) -> list:
        from .sim_human import SketchRequest

        label = frame.get("label") or ""
        points = frame.get("points") or []
        if not label.strip():
            self.session.send_error("bad_sketch", "sketch needs a non-empty label")
            return []
        if label in self.session.known_labels:
            self.session.send_error("duplicate_label", f"label {label!r} already registered")
            return []
        try:
            pts = np.asarray(points, dtype=float).reshape(-1, 2)
        except ValueError:
            self.session.send_error("bad_sketch", "points must be [[x, y], ...]")
            return []
        if len(pts) < 3:
            self.session.send_error("bad_sketch", "need at least 3 stroke points")
            return []
        delta = frame.get("delta")
        if delta is not None:
            delta = float(delta)
        self.session.pending_sketch_labels.add(label)
        return [("sketch", SketchRequest(label=label, points=pts, delta=delta))]

    def _handle_statement(self, frame: dict) -> list:
        if self.mode == MODE_ACTIVE:
            self.session.send_error("mode_gated", "statements are disabled in active mode")
            return []
        relation = frame.get("relation")
        label = frame.get("label")
        if relation not in STATEMENT_RELATIONS:
            self.session.send_error("bad_statement", f"unknown relation {relation!r}")
            return []
        if label not in self.session.known_labels:
            self.session.send_error("unknown_label", f"no sketch labeled {label!r}")
            return []
        stmt = Statement(bool(frame.get("positive", True)), relation, label)
        self.session.send({"type": "statement_ack", "text": stmt.text()})
        return [("statement", stmt)]

    def _handle_answer(self, frame: dict, t: float) -> list:
        raw = str(frame.get("answer", "")).lower().replace("'", "").replace(" ", "")
        answer = ANSWER_ALIASES.get(raw)
        if answer is None:
            self.session.send_error("bad_answer", f"unknown answer {frame.get('answer')!r}")
            return []
        if self.pending is None or frame.get("id") != self.pending[0]:
            self.session.send({"type": "notice",
                               "message": "answer ignored (no matching open query)"})
            return []
        qid, query, deadline = self.pending
        if t > deadline:
            self.session.send({"type": "notice",
                               "message": "answer ignored (past deadline)"})
            self.pending = None
            return []
        self.pending = None
        return [("answer", (query, answer))]


class Session:
    def __init__(self, config: ServiceConfig, seed: int):
        self.id = uuid.uuid4().hex[:12]
        self.config = config
        self.seed = seed
        self.episode_cfg = config.episode_config(seed)
        self.inbox: queue.Queue = queue.Queue()
        self.outbox: queue.Queue = queue.Queue()
        self.glimpses: list = []
        self.known_labels: set[str] = set()
        self.pending_sketch_labels: set[str] = set()
        self.engine_t = 0.0
        self.network: RoadNetwork | None = None
        self.done = False
        self.result = None
        self.human = LiveHuman(self)
        self.last_view: EngineView | None = None
        self.connected = False
        self.thread: threading.Thread | None = None

    # outbound ---------------------------------------------------------------

    def send(self, frame: dict) -> None:
        frame.setdefault("v", PROTOCOL_VERSION)
        try:
            self.outbox.put_nowait(json.dumps(frame))
        except queue.Full:
            pass

    def send_error(self, code: str, message: str) -> None:
        self.send({"type": "error", "code": code, "message": message})

    def send_snapshot(self) -> None:
        if self.network is None:
            return
        net = self.network
        self.send({
            "type": "hello", "session": self.id, "mode": self.config.mode,
            "t_max": self.episode_cfg.world.t_max,
            "extent": self.episode_cfg.world.extent,
            "map": {
                "nodes": [[round(x, 2), round(y, 2)] for x, y in net.nodes],
                "edges": [[int(a), int(b)] for a, b in net.edges],
                "landmarks": [[n, [round(x, 2), round(y, 2)]]
                              for n, (x, y) in net.landmarks],
            },
        })

    def _telemetry(self, view: EngineView) -> None:
        self.engine_t = view.t
        self.last_view = view
        rng = np.random.default_rng(int(view.t))
        belief_pts = view.belief.downsample(BELIEF_POINTS, rng)
        queries = [q for q in view.codebook.query_actions if q is not None]
        frame = {
            "type": "telemetry", "t": view.t,
            "robot": [round(view.robot.x, 2), round(view.robot.y, 2)],
            "heading": round(view.robot.heading, 4),
            "belief": [[round(float(x), 1), round(float(y), 1)] for x, y in belief_pts],
            "glimpses": self.glimpses[-5:],
            "labels": sorted(view.codebook.sketches),
            "query_space": len(view.codebook.query_actions),
            "captured": view.captured,
        }
        while self.outbox.qsize() >= TELEMETRY_QUEUE_LIMIT:
            try:  # bounded queue: drop the oldest telemetry first
                self.outbox.get_nowait()
            except queue.Empty:
                break
        self.send(frame)
        new_labels = set(view.codebook.sketches) - self.known_labels
        for label in sorted(new_labels):
            sk = view.codebook.sketches[label]
            self.known_labels.add(label)
            self.send({"type": "sketch_ack", "label": label,
                       "polygon": [[round(float(x), 2), round(float(y), 2)]
                                   for x, y in sk.polygon.vertices],
                       "query_space": len(view.codebook.query_actions)})
        if self.config.pace > 0:
            time.sleep(self.config.pace)

    # engine -----------------------------------------------------------------

    def start(self) -> None:
        self.thread = threading.Thread(target=self._run, daemon=True,
                                       name=f"session-{self.id}")
        self.thread.start()

    def _run(self) -> None:
        try:
            os.makedirs(self.config.session_dir, exist_ok=True)
            log_path = os.path.join(self.config.session_dir,
                                    f"session_{self.id}.jsonl")
            metrics, _ = run_episode(self.episode_cfg, human_source=self.human,
                                     log_path=log_path, tick_hook=self._telemetry)
            self.result = metrics
            self.send({"type": "end", "captured": metrics.captured,
                       "t": self.engine_t, "ttc": metrics.time_to_capture,
                       "summary": metrics.to_dict(), "log": log_path})
        except Exception as err:  # surface engine crashes to the client
            self.send_error("engine", repr(err))
        finally:
            self.done = True


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="sketchsearch session service")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    app.state.config = config

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "sessions": len(sessions)}

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        params = ws.query_params
        existing = params.get("session")
        if existing and existing in sessions:
            session = sessions[existing]
        else:
            seed = int(params.get("seed", int(time.time()) & 0x7FFFFFFF))
            session = Session(config, seed)
            sessions[session.id] = session
            from .episode import load_network

            session.network = load_network(session.episode_cfg)
            session.start()
        session.connected = True
        session.send_snapshot()

        import asyncio

        async def writer():
            last_beat = time.monotonic()
            while True:
                try:
                    frame = session.outbox.get_nowait()
                    await ws.send_text(frame)
                except queue.Empty:
                    await asyncio.sleep(0.002)
                if time.monotonic() - last_beat >= HEARTBEAT_SECONDS:
                    await ws.send_text(json.dumps(
                        {"type": "heartbeat", "v": PROTOCOL_VERSION,
                         "t": session.engine_t}))
                    last_beat = time.monotonic()
                if session.done and session.outbox.empty():
                    return

        writer_task = asyncio.create_task(writer())
        try:
            while not session.done:
                text = await ws.receive_text()
                try:
                    frame = json.loads(text)
                    if not isinstance(frame, dict):
                        raise ValueError("frame must be a JSON object")
                except ValueError as err:
                    session.send_error("malformed", str(err))
                    continue
                session.inbox.put(frame)
        except WebSocketDisconnect:
            session.connected = False  # session degrades to no-human behavior
        finally:
            if not writer_task.done():
                try:
                    await asyncio.wait_for(writer_task, timeout=1.0)
                except Exception:
                    writer_task.cancel()

    return app
