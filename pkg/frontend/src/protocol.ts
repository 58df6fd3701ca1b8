// Frame types for the session protocol (see ../PROTOCOL.md), v1.
// One JSON object per websocket text message.

export const PROTOCOL_VERSION = 1;

export type Point = [number, number];

export interface MapData {
  nodes: Point[];
  edges: [number, number][];
  landmarks: [string, Point][];
}

export interface HelloFrame {
  type: "hello";
  session: string;
  mode: "active" | "passive" | "both";
  t_max: number;
  extent: number;
  map: MapData;
}

export interface TelemetryFrame {
  type: "telemetry";
  t: number;
  robot: Point;
  heading: number;
  belief: Point[];
  glimpses: Point[];
  labels: string[];
  query_space: number;
  captured: boolean;
}

export interface QueryFrame {
  type: "query";
  id: number;
  relation: string;
  label: string | null;
  text: string;
  deadline_t: number;
}

export interface SketchAckFrame {
  type: "sketch_ack";
  label: string;
  polygon: Point[];
  query_space: number;
}

export interface EndFrame {
  type: "end";
  captured: boolean;
  t: number;
  ttc: number | null;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame =
  | HelloFrame
  | TelemetryFrame
  | QueryFrame
  | SketchAckFrame
  | EndFrame
  | ErrorFrame
  | { type: "statement_ack"; text: string }
  | { type: "query_expired"; id: number }
  | { type: "notice"; message: string }
  | { type: "heartbeat"; t: number };

export const STATEMENT_RELATIONS = [
  "Near",
  "Inside",
  "North",
  "NorthEast",
  "East",
  "SouthEast",
  "South",
  "SouthWest",
  "West",
  "NorthWest",
] as const;

export type Relation = (typeof STATEMENT_RELATIONS)[number];
export type Answer = "yes" | "no" | "idontknow";

export function parseFrame(text: string): ServerFrame {
  const raw: unknown = JSON.parse(text);
  if (typeof raw !== "object" || raw === null || !("type" in raw)) {
    throw new Error("frame must be an object with a type");
  }
  return raw as ServerFrame;
}

// client -> server frames; every input carries a client timestamp
// (server tick time remains authoritative in the episode log)

export function sketchFrame(label: string, delta: number | null, points: Point[]) {
  return {
    type: "sketch",
    v: PROTOCOL_VERSION,
    label,
    delta,
    points,
    client_ts: Date.now(),
  };
}

export function statementFrame(positive: boolean, relation: Relation, label: string) {
  return {
    type: "statement",
    v: PROTOCOL_VERSION,
    positive,
    relation,
    label,
    client_ts: Date.now(),
  };
}

export function answerFrame(id: number, answer: Answer) {
  return { type: "answer", v: PROTOCOL_VERSION, id, answer, client_ts: Date.now() };
}

export function snapshotRequest() {
  return { type: "snapshot_request", v: PROTOCOL_VERSION };
}

export function statementText(positive: boolean, relation: string, label: string): string {
  return `Target ${positive ? "is" : "is not"} ${relation} ${label}`;
}
