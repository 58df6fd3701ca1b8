import { describe, expect, it } from "vitest";

import {
  answerFrame,
  parseFrame,
  sketchFrame,
  statementFrame,
  statementText,
} from "../src/protocol.js";

describe("frame parsing", () => {
  it("round-trips a telemetry frame", () => {
    const text = JSON.stringify({
      type: "telemetry", t: 12, robot: [500, 400], heading: 0.3,
      belief: [[1, 2]], glimpses: [], labels: ["Pond"], query_space: 6,
      captured: false,
    });
    const frame = parseFrame(text);
    expect(frame.type).toBe("telemetry");
    if (frame.type === "telemetry") {
      expect(frame.robot).toEqual([500, 400]);
      expect(frame.query_space).toBe(6);
    }
  });

  it("rejects non-object frames", () => {
    expect(() => parseFrame("42")).toThrow();
    expect(() => parseFrame('"hi"')).toThrow();
  });

  it("rejects invalid json", () => {
    expect(() => parseFrame("{nope")).toThrow();
  });
});

describe("outgoing frames", () => {
  it("sketch frame carries the stroke verbatim with a client timestamp", () => {
    const pts: [number, number][] = [[1, 2], [3, 4], [5, 6]];
    const frame = sketchFrame("area1", 0.5, pts) as Record<string, unknown>;
    expect(frame.type).toBe("sketch");
    expect(frame.label).toBe("area1");
    expect(frame.delta).toBe(0.5);
    expect(frame.points).toEqual(pts);
    expect(typeof frame.client_ts).toBe("number");
  });

  it("statement frame carries structured fields", () => {
    const frame = statementFrame(false, "Inside", "Pond") as Record<string, unknown>;
    expect(frame.positive).toBe(false);
    expect(frame.relation).toBe("Inside");
    expect(frame.label).toBe("Pond");
  });

  it("answer frame references the query id", () => {
    const frame = answerFrame(7, "idontknow") as Record<string, unknown>;
    expect(frame.id).toBe(7);
    expect(frame.answer).toBe("idontknow");
  });
});

describe("statement grammar", () => {
  it("emits the exact template", () => {
    expect(statementText(true, "Near", "Pond")).toBe("Target is Near Pond");
    expect(statementText(false, "Inside", "mountains")).toBe(
      "Target is not Inside mountains");
    expect(statementText(true, "NorthEast", "Farm")).toBe(
      "Target is NorthEast Farm");
  });
});
