/**
 * Client-side scene model: a mirror of the latest server state plus pure
 * presentation fields (camera, flashes, event history).
 *
 * The model never computes physics. Trajectory previews, tension, contact
 * commands, scores, and every position come verbatim from server messages;
 * the only arithmetic here is presentation (picking which drones to flash,
 * clamping the tension bar defensively).
 */

import type {
  AimView,
  ContactReadout,
  GateInfo,
  Phase,
  ScoredMsg,
  ServerMsg,
  TelemetryMsg,
  TrajectoryVertex,
  Vec3,
} from "./protocol.js";

export interface CameraPose {
  /** Orbit target in world coordinates. */
  target: Vec3;
  yawRad: number;
  pitchRad: number;
  distance: number;
}

export interface CollisionFlash {
  drones: number[];
  arrow: boolean;
  framesLeft: number;
}

const EVENT_HISTORY_CAP = 8;
const FLASH_FRAMES = 24;

export interface SceneModel {
  session: string;
  phase: Phase;
  /** Set on release; aim input stays disabled until the shot resolves. */
  releasePending: boolean;
  policy: string;
  agents: Vec3[];
  arrow: { pos: Vec3; active: boolean };
  gates: GateInfo[];
  score: number;
  shotsFired: number;
  step: number;
  frame: number;
  interpolated: boolean;
  doneReason: string | null;
  /** Server aim snapshot; null when no aim is loaded. */
  aim: AimView | null;
  /** Server-computed preview polyline (the aim's trajectory, verbatim). */
  preview: readonly TrajectoryVertex[];
  /** Tension bar value in [0, 1]; server value, clamped defensively. */
  tension: number;
  contact: ContactReadout | null;
  degenerateAim: boolean;
  lastError: string | null;
  collisionFlash: CollisionFlash | null;
  events: ScoredMsg[];
  camera: CameraPose;
}

export function newSceneModel(): SceneModel {
  return {
    session: "",
    phase: "aiming",
    releasePending: false,
    policy: "",
    agents: [],
    arrow: { pos: [0, 0, 0], active: false },
    gates: [],
    score: 0,
    shotsFired: 0,
    step: 0,
    frame: -1,
    interpolated: false,
    doneReason: null,
    aim: null,
    preview: [],
    tension: 0,
    contact: null,
    degenerateAim: false,
    lastError: null,
    collisionFlash: null,
    events: [],
    camera: {
      target: [0, 1.2, 1.2],
      yawRad: -0.5,
      pitchRad: 0.35,
      distance: 6.5,
    },
  };
}

/** Aim input is legal whenever no shot is in the air (a fresh aim after
 * scoring starts the next attempt). */
export function canAim(model: SceneModel): boolean {
  return model.phase !== "in_flight" && !model.releasePending;
}

export function canRelease(model: SceneModel): boolean {
  return canAim(model) && model.aim !== null && !model.degenerateAim;
}

/** Call when a release message is sent so further aim input is dropped. */
export function markReleaseSent(model: SceneModel): void {
  model.releasePending = true;
}

/** Call when an aim message is sent (clears a stale degenerate marker). */
export function markAimSent(model: SceneModel): void {
  model.degenerateAim = false;
  model.lastError = null;
}

function distance(a: Vec3, b: Vec3): number {
  const dx = a[0] - b[0];
  const dy = a[1] - b[1];
  const dz = a[2] - b[2];
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}

/**
 * Pick the drones to flash after a collision: the closest pair among
 * drone-drone and drone-arrow distances in the last authoritative frame.
 * Presentation only; uses nothing but server positions.
 */
function collisionSuspects(model: SceneModel): CollisionFlash {
  let best = Infinity;
  let drones: number[] = [];
  let arrow = false;
  for (let i = 0; i < model.agents.length; i++) {
    const a = model.agents[i]!;
    for (let j = i + 1; j < model.agents.length; j++) {
      const d = distance(a, model.agents[j]!);
      if (d < best) {
        best = d;
        drones = [i, j];
        arrow = false;
      }
    }
    if (model.arrow.active) {
      const d = distance(a, model.arrow.pos);
      if (d < best) {
        best = d;
        drones = [i];
        arrow = true;
      }
    }
  }
  return { drones, arrow, framesLeft: FLASH_FRAMES };
}

function clamp01(x: number): number {
  return Math.max(0, Math.min(1, x));
}

function applyTelemetry(model: SceneModel, msg: TelemetryMsg): void {
  // flash decision uses the positions of the frame before the reset
  if (msg.done_reason === "collision" && model.doneReason !== "collision") {
    model.collisionFlash = collisionSuspects(model);
  }
  model.session = msg.session;
  model.phase = msg.phase;
  model.policy = msg.policy;
  model.agents = msg.agents.map((p) => [p[0], p[1], p[2]] as const);
  model.arrow = { pos: msg.arrow.pos, active: msg.arrow.active };
  model.gates = msg.gates.slice();
  model.score = msg.score;
  model.shotsFired = msg.shots_fired;
  model.step = msg.step;
  model.frame = msg.frame;
  model.interpolated = msg.interpolated;
  model.doneReason = msg.done_reason;
  model.aim = msg.aim;
  model.preview = msg.aim ? msg.aim.trajectory : [];
  model.tension = msg.aim ? clamp01(msg.aim.tension) : 0;
  model.contact = msg.aim ? msg.aim.contact : null;
  if (msg.phase !== "in_flight") {
    model.releasePending = false;
  }
}

function applyScored(model: SceneModel, msg: ScoredMsg): void {
  model.score = msg.score;
  model.shotsFired = msg.shots_fired;
  model.releasePending = false;
  model.events.push(msg);
  if (model.events.length > EVENT_HISTORY_CAP) {
    model.events.splice(0, model.events.length - EVENT_HISTORY_CAP);
  }
}

function applyError(model: SceneModel, message: string): void {
  model.lastError = message;
  if (message.includes("degenerate aim")) {
    model.degenerateAim = true;
  }
  // a rejected release leaves the server in aiming phase; re-enable input
  if (message.includes("cannot release")) {
    model.releasePending = false;
  }
}

/** Apply one decoded message. Mutates the model in place. */
export function applyServerMessage(model: SceneModel, msg: ServerMsg): void {
  switch (msg.kind) {
    case "telemetry":
      applyTelemetry(model, msg);
      break;
    case "scored":
      applyScored(model, msg);
      break;
    case "error":
      applyError(model, msg.message);
      break;
  }
}

/** Per-frame bookkeeping for time-limited presentation effects. */
export function advanceFrameEffects(model: SceneModel): void {
  if (model.collisionFlash && --model.collisionFlash.framesLeft <= 0) {
    model.collisionFlash = null;
  }
}
