import { describe, expect, it } from "vitest";

import { dragToHands, handSeparation } from "../src/input.js";
import type { ServerMsg, TelemetryMsg } from "../src/protocol.js";
import {
  advanceFrameEffects,
  applyServerMessage,
  canAim,
  canRelease,
  markAimSent,
  markReleaseSent,
  newSceneModel,
} from "../src/state.js";

function telemetry(overrides: Partial<TelemetryMsg> = {}): TelemetryMsg {
  return {
    kind: "telemetry",
    session: "s1",
    frame: 0,
    step: 0,
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
    gates: [],
    aim: null,
    ...overrides,
  };
}

function aimedTelemetry(tension = 0.5): TelemetryMsg {
  return telemetry({
    aim: {
      stretch: tension,
      tension,
      energy: 0.125,
      speed: 3.0,
      velocity: [0, 3, 0],
      contact: { slide_mm: 20.0, force_n: 1.0 },
      trajectory: [
        [0, 0, 0, 1.5],
        [0.1, 0, 0.3, 1.45],
        [0.2, 0, 0.6, 1.3],
      ],
    },
  });
}

describe("scene model", () => {
  it("mirrors telemetry verbatim, including the preview polyline", () => {
    const model = newSceneModel();
    const msg = aimedTelemetry();
    applyServerMessage(model, msg);
    expect(model.agents).toEqual(msg.agents);
    expect(model.preview).toEqual(msg.aim!.trajectory);
    // exact float equality vertex by vertex, not approximate
    msg.aim!.trajectory.forEach((v, i) =>
      v.forEach((x, j) => expect(model.preview[i]![j]).toBe(x)),
    );
    expect(model.tension).toBe(0.5);
    expect(model.contact).toEqual({ slide_mm: 20.0, force_n: 1.0 });
  });

  it("half-meter hand separation maps to a half tension bar", () => {
    const hands = dragToHands([0, 0], [0, 100], 0); // 100 px at 5 mm/px
    expect(handSeparation(hands)).toBeCloseTo(0.5, 12);
    const model = newSceneModel();
    applyServerMessage(model, aimedTelemetry(0.5));
    expect(model.tension).toBe(0.5);
  });

  it("clamps a tension overshoot into the bar range", () => {
    const model = newSceneModel();
    applyServerMessage(model, aimedTelemetry(1.2));
    expect(model.tension).toBe(1);
  });

  it("flags degenerate aim from the server error and clears on next aim", () => {
    const model = newSceneModel();
    applyServerMessage(model, { kind: "error", message: "degenerate aim" });
    expect(model.degenerateAim).toBe(true);
    expect(canRelease(model)).toBe(false);
    markAimSent(model);
    expect(model.degenerateAim).toBe(false);
  });

  it("gates aim input by phase and pending release", () => {
    const model = newSceneModel();
    applyServerMessage(model, aimedTelemetry());
    expect(canAim(model)).toBe(true);
    expect(canRelease(model)).toBe(true);

    markReleaseSent(model);
    expect(canAim(model)).toBe(false); // disabled before the server confirms

    applyServerMessage(model, telemetry({ phase: "in_flight" }));
    expect(canAim(model)).toBe(false);

    applyServerMessage(
      model,
      { kind: "scored", gate: "red", points: 5, score: 5, shots_fired: 1 },
    );
    expect(model.score).toBe(5);
    applyServerMessage(model, telemetry({ phase: "scored", score: 5 }));
    expect(canAim(model)).toBe(true); // new aim allowed after scoring
  });

  it("a rejected release re-enables aiming", () => {
    const model = newSceneModel();
    applyServerMessage(model, telemetry());
    markReleaseSent(model);
    applyServerMessage(model, {
      kind: "error",
      message: "cannot release in phase scored",
    });
    expect(canAim(model)).toBe(true);
  });

  it("accumulates score panel increments by gate weight", () => {
    const model = newSceneModel();
    const hits: ServerMsg[] = [
      { kind: "scored", gate: "grey", points: 1, score: 1, shots_fired: 1 },
      { kind: "scored", gate: "blue", points: 3, score: 4, shots_fired: 2 },
      { kind: "scored", gate: "red", points: 5, score: 9, shots_fired: 3 },
    ];
    let last = 0;
    for (const h of hits) {
      applyServerMessage(model, h);
      expect(model.score - last).toBe(h.kind === "scored" ? h.points : 0);
      last = model.score;
    }
    expect(model.score).toBe(9);
  });

  it("identical consecutive telemetry changes nothing visible", () => {
    const model = newSceneModel();
    applyServerMessage(model, telemetry());
    const before = JSON.parse(JSON.stringify({ ...model, frame: 0 }));
    applyServerMessage(model, telemetry({ frame: 1 }));
    const after = JSON.parse(JSON.stringify({ ...model, frame: 0 }));
    expect(after).toEqual(before);
  });

  it("flashes the closest pair when a collision ends the episode", () => {
    const model = newSceneModel();
    applyServerMessage(
      model,
      telemetry({
        agents: [
          [0, 0, 1.5],
          [0.05, 0, 1.5],
          [1.5, 1.5, 1.5],
        ],
      }),
    );
    applyServerMessage(model, telemetry({ done_reason: "collision" }));
    expect(model.collisionFlash?.drones).toEqual([0, 1]);
    for (let i = 0; i < 60; i++) advanceFrameEffects(model);
    expect(model.collisionFlash).toBeNull();
  });

  it("keeps bounded state over a long session", () => {
    const model = newSceneModel();
    for (let f = 0; f < 72000; f++) {
      // 60 minutes of 20 Hz telemetry
      applyServerMessage(model, telemetry({ frame: f }));
      if (f % 50 === 0) {
        applyServerMessage(model, {
          kind: "scored",
          gate: null,
          points: 0,
          score: 0,
          shots_fired: f / 50,
        });
      }
    }
    expect(model.events.length).toBeLessThanOrEqual(8);
    expect(model.agents).toHaveLength(3);
  });
});
