/**
 * Canvas renderer: a light 3D-to-2D orbit projection plus the HUD (tension
 * bar, contact readout, score panel). Pure drawing; every physical value
 * comes from the scene model, which mirrors server messages.
 */

import type { GateInfo, Vec3 } from "./protocol.js";
import type { CameraPose, SceneModel } from "./state.js";

interface Projected {
  x: number;
  y: number;
  scale: number;
}

const COLORS: Record<string, string> = {
  grey: "#9aa0a6",
  blue: "#4d9de0",
  red: "#e15554",
};

function project(
  p: Vec3,
  cam: CameraPose,
  width: number,
  height: number,
): Projected {
  const cy = Math.cos(cam.yawRad);
  const sy = Math.sin(cam.yawRad);
  const cp = Math.cos(cam.pitchRad);
  const sp = Math.sin(cam.pitchRad);
  // translate to the orbit target, yaw about z (up), pitch about x
  const dx = p[0] - cam.target[0];
  const dy = p[1] - cam.target[1];
  const dz = p[2] - cam.target[2];
  const x1 = cy * dx + sy * dy;
  const y1 = -sy * dx + cy * dy;
  const y2 = cp * y1 + sp * dz;
  const z2 = -sp * y1 + cp * dz;
  const depth = cam.distance + y2;
  const f = (0.9 * Math.min(width, height)) / Math.max(depth, 0.1);
  return {
    x: width / 2 + f * x1,
    y: height / 2 - f * z2,
    scale: f,
  };
}

function drawPolyline(
  ctx: CanvasRenderingContext2D,
  pts: Projected[],
  stroke: string,
  dash: number[] = [],
): void {
  if (pts.length < 2) return;
  ctx.save();
  ctx.strokeStyle = stroke;
  ctx.setLineDash(dash);
  ctx.beginPath();
  ctx.moveTo(pts[0]!.x, pts[0]!.y);
  for (const p of pts.slice(1)) ctx.lineTo(p.x, p.y);
  ctx.stroke();
  ctx.restore();
}

function arenaEdges(): Array<[Vec3, Vec3]> {
  const lo = [-2, -2, 0];
  const hi = [2, 2, 3];
  const c = (i: number, j: number, k: number): Vec3 => [
    i ? hi[0]! : lo[0]!,
    j ? hi[1]! : lo[1]!,
    k ? hi[2]! : lo[2]!,
  ];
  const edges: Array<[Vec3, Vec3]> = [];
  for (const a of [0, 1])
    for (const b of [0, 1]) {
      edges.push([c(0, a, b), c(1, a, b)]);
      edges.push([c(a, 0, b), c(a, 1, b)]);
      edges.push([c(a, b, 0), c(a, b, 1)]);
    }
  return edges;
}

function gateCorners(g: GateInfo): Vec3[] {
  // gates are axis-aligned rectangles; the axis names the plane normal
  const [cx, cy, cz] = g.center;
  const w = g.width / 2;
  const h = g.height / 2;
  if (g.axis === "y") {
    return [
      [cx - w, cy, cz - h],
      [cx + w, cy, cz - h],
      [cx + w, cy, cz + h],
      [cx - w, cy, cz + h],
    ];
  }
  if (g.axis === "x") {
    return [
      [cx, cy - w, cz - h],
      [cx, cy + w, cz - h],
      [cx, cy + w, cz + h],
      [cx, cy - w, cz + h],
    ];
  }
  return [
    [cx - w, cy - h, cz],
    [cx + w, cy - h, cz],
    [cx + w, cy + h, cz],
    [cx - w, cy + h, cz],
  ];
}

function drawHud(
  ctx: CanvasRenderingContext2D,
  model: SceneModel,
  width: number,
  height: number,
): void {
  ctx.save();
  ctx.font = "14px system-ui, sans-serif";

  // score panel
  ctx.fillStyle = "#222";
  ctx.fillText(`score ${model.score}`, 12, 22);
  ctx.fillText(`shots ${model.shotsFired}`, 12, 40);
  ctx.fillText(`phase ${model.phase}`, 12, 58);
  ctx.fillText(`policy ${model.policy || "-"}`, 12, 76);
  const lastEvent = model.events[model.events.length - 1];
  if (lastEvent) {
    ctx.fillText(
      lastEvent.gate
        ? `hit ${lastEvent.gate} +${lastEvent.points}`
        : "miss +0",
      12,
      94,
    );
  }

  // tension bar (the sliding-bar analogue), bottom left
  const barW = 180;
  const barH = 14;
  const bx = 12;
  const by = height - 30;
  ctx.strokeStyle = "#555";
  ctx.strokeRect(bx, by, barW, barH);
  ctx.fillStyle = "#e1a33b";
  ctx.fillRect(bx, by, barW * model.tension, barH);
  ctx.fillStyle = "#222";
  ctx.fillText(`tension ${(100 * model.tension).toFixed(0)}%`, bx, by - 6);

  // contact readout: slide position as a slider, force as a pressure dot
  if (model.contact) {
    const sx = bx + barW + 40;
    ctx.strokeStyle = "#555";
    ctx.strokeRect(sx, by, barW, barH);
    const slide01 = Math.max(0, Math.min(1, model.contact.slide_mm / 40));
    ctx.fillStyle = "#4d9de0";
    ctx.fillRect(sx + barW * slide01 - 2, by - 2, 4, barH + 4);
    const force01 = Math.max(0, Math.min(1, model.contact.force_n / 2));
    ctx.beginPath();
    ctx.arc(sx + barW + 24, by + barH / 2, 4 + 8 * force01, 0, 2 * Math.PI);
    ctx.fillStyle = "#e15554";
    ctx.fill();
    ctx.fillStyle = "#222";
    ctx.fillText(
      `slide ${model.contact.slide_mm.toFixed(1)} mm  force ${model.contact.force_n.toFixed(2)} N`,
      sx,
      by - 6,
    );
  }

  if (model.degenerateAim) {
    ctx.fillStyle = "#e15554";
    ctx.fillText("degenerate aim: separate your hands", width / 2 - 100, 24);
  } else if (model.lastError) {
    ctx.fillStyle = "#a06000";
    ctx.fillText(model.lastError, width / 2 - 100, 24);
  }
  if (model.releasePending || model.phase === "in_flight") {
    ctx.fillStyle = "#555";
    ctx.fillText("arrow in flight...", width / 2 - 50, 44);
  }
  ctx.restore();
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  model: SceneModel,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);
  const cam = model.camera;
  const pr = (p: Vec3) => project(p, cam, width, height);

  for (const [a, b] of arenaEdges()) {
    drawPolyline(ctx, [pr(a), pr(b)], "#d0d0d0");
  }

  for (const g of model.gates) {
    const corners = gateCorners(g).map(pr);
    corners.push(corners[0]!);
    drawPolyline(ctx, corners, COLORS[g.name] ?? "#444");
    const c = pr(g.center);
    ctx.fillStyle = COLORS[g.name] ?? "#444";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText(`${g.name} (${g.weight})`, c.x - 18, c.y);
  }

  // server-computed flight preview
  if (model.preview.length > 1) {
    const pts = model.preview.map((v) => pr([v[1], v[2], v[3]]));
    drawPolyline(ctx, pts, "#7a7a7a", [6, 4]);
  }

  // drones
  model.agents.forEach((p, i) => {
    const q = pr(p);
    const flash =
      model.collisionFlash !== null && model.collisionFlash.drones.includes(i);
    ctx.beginPath();
    ctx.arc(q.x, q.y, Math.max(3, 0.09 * q.scale), 0, 2 * Math.PI);
    ctx.fillStyle = flash && model.collisionFlash!.framesLeft % 8 < 4 ? "#e15554" : "#2b8a3e";
    ctx.fill();
  });

  // arrow
  if (model.arrow.active) {
    const q = pr(model.arrow.pos);
    const flashArrow =
      model.collisionFlash !== null && model.collisionFlash.arrow;
    ctx.beginPath();
    ctx.arc(q.x, q.y, Math.max(2, 0.05 * q.scale), 0, 2 * Math.PI);
    ctx.fillStyle = flashArrow ? "#e15554" : "#333";
    ctx.fill();
  }

  drawHud(ctx, model, width, height);
}
