import { describe, expect, it } from "vitest";

import { Camera, Ctx2D, render } from "../src/render.js";
import { SessionState } from "../src/state.js";
import { HelloFrame } from "../src/protocol.js";

class RecordingCtx implements Ctx2D {
  canvas = { width: 800, height: 600 };
  fillStyle: string = "";
  strokeStyle: string = "";
  lineWidth = 1;
  globalAlpha = 1;
  font = "";
  calls: string[] = [];
  clearRect() { this.calls.push("clearRect"); }
  beginPath() { this.calls.push("beginPath"); }
  moveTo() { this.calls.push("moveTo"); }
  lineTo() { this.calls.push("lineTo"); }
  arc() { this.calls.push("arc"); }
  closePath() { this.calls.push("closePath"); }
  stroke() { this.calls.push("stroke"); }
  fill() { this.calls.push("fill"); }
  fillRect() { this.calls.push("fillRect"); }
  fillText(text: string) { this.calls.push(`text:${text}`); }
}

const hello: HelloFrame = {
  type: "hello", session: "s", mode: "both", t_max: 600, extent: 1000,
  map: { nodes: [[0, 0], [200, 0], [200, 200]], edges: [[0, 1], [1, 2]],
         landmarks: [["Pond", [100, 100]]] },
};

describe("renderer", () => {
  it("draws roads, landmarks, outlines, and the robot without throwing", () => {
    const s = new SessionState();
    s.ingest(hello);
    s.ingest({ type: "telemetry", t: 1, robot: [50, 50], heading: 0.4,
               belief: [[10, 10], [20, 20]], glimpses: [[90, 90]], labels: [],
               query_space: 1, captured: false });
    s.ingest({ type: "sketch_ack", label: "area1",
               polygon: [[0, 0], [30, 0], [30, 30]], query_space: 6 });
    const ctx = new RecordingCtx();
    render(ctx, s, new Camera());
    expect(ctx.calls.filter((c) => c === "stroke").length).toBeGreaterThan(3);
    expect(ctx.calls).toContain("text:Pond");
    expect(ctx.calls).toContain("text:area1");
    expect(ctx.calls).toContain("arc");
  });

  it("camera zoom keeps the anchor point fixed", () => {
    const cam = new Camera();
    const before = cam.toWorld([400, 300], 600);
    cam.zoom(1.5, 400, 300, 600);
    const after = cam.toWorld([400, 300], 600);
    expect(after[0]).toBeCloseTo(before[0], 6);
    expect(after[1]).toBeCloseTo(before[1], 6);
  });

  it("screen/world transforms invert each other", () => {
    const cam = new Camera();
    cam.pan(37, -12);
    cam.zoom(1.3, 100, 100, 600);
    const world: [number, number] = [512.5, 223.25];
    const back = cam.toWorld(cam.toScreen(world, 600), 600);
    expect(back[0]).toBeCloseTo(world[0], 6);
    expect(back[1]).toBeCloseTo(world[1], 6);
  });
});
