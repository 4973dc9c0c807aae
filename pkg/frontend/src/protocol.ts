/**
 * Wire types and codecs for the game service websocket.
 *
 * Every number shown in the UI originates from these messages; the client
 * performs no physics of its own. Server floats arrive with full float64
 * precision and JSON.parse preserves them bit-exactly.
 */

export type Vec3 = readonly [number, number, number];

/** [t, x, y, z] vertices of the server-computed flight preview. */
export type TrajectoryVertex = readonly [number, number, number, number];

export type Phase = "aiming" | "in_flight" | "scored";

export interface GateInfo {
  readonly name: string;
  readonly center: Vec3;
  readonly width: number;
  readonly height: number;
  readonly weight: number;
  readonly axis: string;
}

export interface ContactReadout {
  readonly slide_mm: number;
  readonly force_n: number;
}

export interface AimView {
  readonly stretch: number;
  readonly tension: number;
  readonly energy: number;
  readonly speed: number;
  readonly velocity: Vec3;
  readonly contact: ContactReadout;
  readonly trajectory: readonly TrajectoryVertex[];
}

export interface TelemetryMsg {
  readonly kind: "telemetry";
  readonly session: string;
  readonly frame: number;
  readonly step: number;
  readonly phase: Phase;
  readonly interpolated: boolean;
  readonly policy: string;
  readonly agents: readonly Vec3[];
  readonly arrow: { readonly pos: Vec3; readonly active: boolean };
  readonly score: number;
  readonly shots_fired: number;
  readonly done_reason: string | null;
  readonly gates: readonly GateInfo[];
  readonly aim: AimView | null;
}

export interface ScoredMsg {
  readonly kind: "scored";
  readonly gate: string | null;
  readonly points: number;
  readonly score: number;
  readonly shots_fired: number;
}

export interface ErrorMsg {
  readonly kind: "error";
  readonly message: string;
  readonly detail?: string;
}

export type ServerMsg = TelemetryMsg | ScoredMsg | ErrorMsg;

export function encodeAim(pBow: Vec3, pArrow: Vec3): string {
  return JSON.stringify({ kind: "aim", p_bow: pBow, p_arrow: pArrow });
}

export function encodeRelease(): string {
  return JSON.stringify({ kind: "release" });
}

export function encodeReset(): string {
  return JSON.stringify({ kind: "reset" });
}

export function encodeSetPolicy(policy: "drl" | "apf"): string {
  return JSON.stringify({ kind: "set_policy", policy });
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isVec3(x: unknown): x is Vec3 {
  return Array.isArray(x) && x.length === 3 && x.every(isFiniteNumber);
}

function isVec3Array(x: unknown): x is Vec3[] {
  return Array.isArray(x) && x.every(isVec3);
}

function isTrajectory(x: unknown): x is TrajectoryVertex[] {
  return (
    Array.isArray(x) &&
    x.every((v) => Array.isArray(v) && v.length === 4 && v.every(isFiniteNumber))
  );
}

function isGate(x: unknown): x is GateInfo {
  if (typeof x !== "object" || x === null) return false;
  const g = x as Record<string, unknown>;
  return (
    typeof g.name === "string" &&
    isVec3(g.center) &&
    isFiniteNumber(g.width) &&
    isFiniteNumber(g.height) &&
    isFiniteNumber(g.weight) &&
    typeof g.axis === "string"
  );
}

function isAim(x: unknown): x is AimView {
  if (x === null) return true; // "no aim" is a valid payload
  if (typeof x !== "object") return false;
  const a = x as Record<string, unknown>;
  const contact = a.contact as Record<string, unknown> | undefined;
  return (
    isFiniteNumber(a.stretch) &&
    isFiniteNumber(a.tension) &&
    isFiniteNumber(a.energy) &&
    isFiniteNumber(a.speed) &&
    isVec3(a.velocity) &&
    typeof contact === "object" &&
    contact !== null &&
    isFiniteNumber(contact.slide_mm) &&
    isFiniteNumber(contact.force_n) &&
    isTrajectory(a.trajectory)
  );
}

function validTelemetry(m: Record<string, unknown>): boolean {
  const arrow = m.arrow as Record<string, unknown> | undefined;
  return (
    typeof m.session === "string" &&
    isFiniteNumber(m.frame) &&
    isFiniteNumber(m.step) &&
    (m.phase === "aiming" || m.phase === "in_flight" || m.phase === "scored") &&
    typeof m.interpolated === "boolean" &&
    typeof m.policy === "string" &&
    isVec3Array(m.agents) &&
    typeof arrow === "object" &&
    arrow !== null &&
    isVec3(arrow.pos) &&
    typeof arrow.active === "boolean" &&
    isFiniteNumber(m.score) &&
    isFiniteNumber(m.shots_fired) &&
    (m.done_reason === null || typeof m.done_reason === "string") &&
    Array.isArray(m.gates) &&
    m.gates.every(isGate) &&
    isAim(m.aim)
  );
}

function validScored(m: Record<string, unknown>): boolean {
  return (
    (m.gate === null || typeof m.gate === "string") &&
    isFiniteNumber(m.points) &&
    isFiniteNumber(m.score) &&
    isFiniteNumber(m.shots_fired)
  );
}

/**
 * Parse one inbound frame. Anything malformed is dropped with a console
 * diagnostic and a null return; the caller never throws on wire input.
 */
export function decodeServerMessage(raw: string): ServerMsg | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (err) {
    console.warn("dropping unparseable frame:", err);
    return null;
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    console.warn("dropping non-object frame");
    return null;
  }
  const m = parsed as Record<string, unknown>;
  switch (m.kind) {
    case "telemetry":
      if (validTelemetry(m)) return m as unknown as TelemetryMsg;
      break;
    case "scored":
      if (validScored(m)) return m as unknown as ScoredMsg;
      break;
    case "error":
      if (typeof m.message === "string") return m as unknown as ErrorMsg;
      break;
  }
  console.warn("dropping malformed frame of kind", m.kind);
  return null;
}
