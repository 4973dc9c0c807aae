import { describe, expect, it, vi } from "vitest";

import {
  decodeServerMessage,
  encodeAim,
  encodeRelease,
  encodeSetPolicy,
} from "../src/protocol.js";

function telemetryJson(overrides: Record<string, unknown> = {}): string {
  return JSON.stringify({
    kind: "telemetry",
    session: "s1",
    frame: 3,
    step: 1,
    phase: "aiming",
    interpolated: false,
    policy: "apf",
    agents: [
      [-0.8, 0.4, 1.5],
      [0.0, 0.4, 1.5],
      [0.8, 0.4, 1.5],
    ],
    arrow: { pos: [0, 0, -1], active: false },
    score: 0,
    shots_fired: 0,
    done_reason: null,
    gates: [
      { name: "red", center: [1.2, 2.5, 1.5], width: 0.4, height: 0.4, weight: 5, axis: "y" },
    ],
    aim: null,
    ...overrides,
  });
}

describe("outbound encoding", () => {
  it("aim carries both hand positions", () => {
    const parsed = JSON.parse(encodeAim([0, 0, 1.5], [0, -0.5, 1.5]));
    expect(parsed).toEqual({
      kind: "aim",
      p_bow: [0, 0, 1.5],
      p_arrow: [0, -0.5, 1.5],
    });
  });

  it("release and set_policy are minimal frames", () => {
    expect(JSON.parse(encodeRelease())).toEqual({ kind: "release" });
    expect(JSON.parse(encodeSetPolicy("drl"))).toEqual({
      kind: "set_policy",
      policy: "drl",
    });
  });
});

describe("inbound decoding", () => {
  it("accepts well-formed telemetry", () => {
    const msg = decodeServerMessage(telemetryJson());
    expect(msg?.kind).toBe("telemetry");
    if (msg?.kind === "telemetry") {
      expect(msg.agents).toHaveLength(3);
      expect(msg.gates[0]?.weight).toBe(5);
    }
  });

  it("parses full-precision server floats exactly", () => {
    // the service serializes floats with 17 fractional digits; JSON.parse
    // must reproduce the exact float64, distinguishing values one ulp apart
    const raw = telemetryJson().replace(
      '"score":0',
      '"score":1.00000000000000006e-01',
    );
    const above = telemetryJson().replace(
      '"score":0',
      '"score":1.00000000000000019e-01',
    );
    const msg = decodeServerMessage(raw);
    const msgAbove = decodeServerMessage(above);
    expect(msg?.kind).toBe("telemetry");
    expect(msgAbove?.kind).toBe("telemetry");
    if (msg?.kind === "telemetry" && msgAbove?.kind === "telemetry") {
      expect(msg.score).toBe(0.1);
      expect(msgAbove.score).toBe(0.10000000000000002);
      expect(msg.score === msgAbove.score).toBe(false);
    }
  });

  it("accepts scored and error frames", () => {
    const scored = decodeServerMessage(
      JSON.stringify({ kind: "scored", gate: "red", points: 5, score: 5, shots_fired: 1 }),
    );
    expect(scored?.kind).toBe("scored");
    const err = decodeServerMessage(
      JSON.stringify({ kind: "error", message: "degenerate aim" }),
    );
    expect(err?.kind).toBe("error");
  });

  it.each([
    ["not json at all", "garbage{{{"],
    ["a bare array", "[1,2,3]"],
    ["an unknown kind", JSON.stringify({ kind: "mystery" })],
    ["telemetry missing agents", telemetryJson({ agents: undefined })],
    ["telemetry with a 2d agent", telemetryJson({ agents: [[1, 2]] })],
    ["telemetry with a NaN score", telemetryJson({ score: "nan" })],
    ["scored without points", JSON.stringify({ kind: "scored", gate: "red" })],
  ])("drops %s with a diagnostic", (_label, raw) => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    expect(decodeServerMessage(raw)).toBeNull();
    expect(warn).toHaveBeenCalled();
    warn.mockRestore();
  });
});
