// Client-side session state: everything the renderer and controls read.
// The engine acks are authoritative: sketch outlines come only from
// sketch_ack frames, never from the raw stroke; reconnecting re-renders
// fully from the next hello + telemetry.

import {
  Answer,
  MapData,
  Point,
  QueryFrame,
  Relation,
  ServerFrame,
  TelemetryFrame,
  answerFrame,
  sketchFrame,
  statementFrame,
  statementText,
} from "./protocol.js";

export const GLIMPSE_FADE_SECONDS = 10;
const TRAIL_LIMIT = 2000;

export interface PendingQuery {
  id: number;
  text: string;
  deadline_t: number;
}

export interface Glimpse {
  pos: Point;
  t: number;
}

export class SessionState {
  mode: "active" | "passive" | "both" = "both";
  map: MapData | null = null;
  extent = 1000;
  t = 0;
  robot: Point | null = null;
  heading = 0;
  trail: Point[] = [];
  belief: Point[] = [];
  outlines = new Map<string, Point[]>();
  labels: string[] = [];
  glimpses: Glimpse[] = [];
  pendingQuery: PendingQuery | null = null;
  stroke: Point[] = [];
  captured = false;
  ended = false;
  querySpace = 1;
  notices: string[] = [];

  reset(): void {
    const mode = this.mode;
    Object.assign(this, new SessionState());
    this.mode = mode;
  }

  // -- frame ingestion -----------------------------------------------------

  ingest(frame: ServerFrame): void {
    switch (frame.type) {
      case "hello":
        this.mode = frame.mode;
        this.map = frame.map;
        this.extent = frame.extent;
        break;
      case "telemetry":
        this.ingestTelemetry(frame);
        break;
      case "query":
        this.ingestQuery(frame);
        break;
      case "query_expired":
        if (this.pendingQuery && this.pendingQuery.id === frame.id) {
          this.pendingQuery = null;
        }
        break;
      case "sketch_ack":
        this.outlines.set(frame.label, frame.polygon);
        this.querySpace = frame.query_space;
        if (!this.labels.includes(frame.label)) this.labels.push(frame.label);
        break;
      case "error":
        this.notices.push(`${frame.code}: ${frame.message}`);
        break;
      case "notice":
        this.notices.push(frame.message);
        break;
      case "end":
        this.ended = true;
        this.captured = frame.captured;
        this.pendingQuery = null;
        break;
      default:
        break;
    }
  }

  private ingestTelemetry(frame: TelemetryFrame): void {
    this.t = frame.t;
    this.robot = frame.robot;
    this.heading = frame.heading;
    this.belief = frame.belief;
    this.labels = frame.labels;
    this.querySpace = frame.query_space;
    this.captured = frame.captured;
    this.trail.push(frame.robot);
    if (this.trail.length > TRAIL_LIMIT) this.trail.shift();
    for (const pos of frame.glimpses) {
      const known = this.glimpses.some(
        (g) => g.pos[0] === pos[0] && g.pos[1] === pos[1]
      );
      if (!known) this.glimpses.push({ pos, t: frame.t });
    }
    if (this.pendingQuery && frame.t >= this.pendingQuery.deadline_t) {
      this.pendingQuery = null; // countdown hit zero: banner clears
    }
  }

  private ingestQuery(frame: QueryFrame): void {
    if (this.mode === "passive") {
      // the server must never prompt a passive-mode subject
      throw new Error("protocol violation: query frame in passive mode");
    }
    this.pendingQuery = {
      id: frame.id,
      text: frame.text,
      deadline_t: frame.deadline_t,
    };
  }

  // -- view predicates -------------------------------------------------------

  queryBannerVisible(): boolean {
    return this.pendingQuery !== null && this.mode !== "passive";
  }

  countdownSeconds(): number {
    if (!this.pendingQuery) return 0;
    return Math.max(0, this.pendingQuery.deadline_t - this.t);
  }

  statementControlsVisible(): boolean {
    return this.mode !== "active";
  }

  visibleGlimpses(): Glimpse[] {
    return this.glimpses.filter((g) => this.t - g.t <= GLIMPSE_FADE_SECONDS);
  }

  // -- stroke capture --------------------------------------------------------

  beginStroke(p: Point): void {
    this.stroke = [p];
  }

  extendStroke(p: Point): void {
    if (this.stroke.length) this.stroke.push(p);
  }

  clearStroke(): void {
    this.stroke = [];
  }

  // -- outgoing frames -------------------------------------------------------

  composeSketch(label: string, delta: number | null): object | null {
    if (!label.trim()) return null; // send blocked client-side
    if (this.stroke.length < 3) return null;
    const frame = sketchFrame(label.trim(), delta, this.stroke.slice());
    this.clearStroke();
    return frame;
  }

  composeStatement(positive: boolean, relation: Relation, label: string):
      { frame: object; text: string } | null {
    if (this.mode === "active") return null; // composer hidden in active mode
    if (!this.labels.includes(label)) return null;
    return {
      frame: statementFrame(positive, relation, label),
      text: statementText(positive, relation, label),
    };
  }

  composeAnswer(answer: Answer): object | null {
    if (!this.pendingQuery) return null;
    const frame = answerFrame(this.pendingQuery.id, answer);
    this.pendingQuery = null;
    return frame;
  }
}
