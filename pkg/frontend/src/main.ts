/**
 * Browser entry point: connect, wire pointer/keyboard input, and run one
 * requestAnimationFrame loop that drains the message queue, applies the
 * batch, and redraws.
 *
 * URL query: ?url=ws://host:port overrides the endpoint, ?policy=drl|apf
 * picks the dodging brain at connect time.
 */

import { dragToHands, defaultAimPlane } from "./input.js";
import { GameClient } from "./net.js";
import { renderScene } from "./render.js";
import {
  advanceFrameEffects,
  applyServerMessage,
  canAim,
  canRelease,
  markAimSent,
  markReleaseSent,
  newSceneModel,
} from "./state.js";

function endpoint(): string {
  const q = new URLSearchParams(window.location.search);
  return q.get("url") ?? "ws://127.0.0.1:8765";
}

function main(): void {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");

  const model = newSceneModel();
  const client = new GameClient(endpoint());
  const q = new URLSearchParams(window.location.search);
  const wantPolicy = q.get("policy");

  const plane = defaultAimPlane();
  // bow hand parks at the anchor; dragging pulls the arrow hand back
  let bowPx: [number, number] = [0, 0];
  let arrowPx: [number, number] = [0, 0];
  let depthNotches = 0;
  let dragging = false;
  let dragStart: [number, number] = [0, 0];

  const sendAim = (): void => {
    if (!canAim(model)) return;
    const hands = dragToHands(bowPx, arrowPx, depthNotches, plane);
    markAimSent(model);
    client.sendAim(hands.pBow, hands.pArrow);
  };

  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    dragStart = [ev.offsetX, ev.offsetY];
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    arrowPx = [
      arrowPx[0] + (ev.offsetX - dragStart[0]),
      arrowPx[1] + (ev.offsetY - dragStart[1]),
    ];
    dragStart = [ev.offsetX, ev.offsetY];
    sendAim();
  });
  canvas.addEventListener("pointerup", () => {
    dragging = false;
    if (canRelease(model)) {
      markReleaseSent(model);
      client.sendRelease();
      arrowPx = [...bowPx];
    }
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    depthNotches += ev.deltaY > 0 ? -1 : 1;
    sendAim();
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "r") client.sendReset();
    if (ev.key === "p") {
      client.sendSetPolicy(model.policy === "apf" ? "drl" : "apf");
    }
  });

  if (wantPolicy === "drl" || wantPolicy === "apf") {
    // fire once the socket opens; harmless if already the default
    setTimeout(() => client.sendSetPolicy(wantPolicy), 300);
  }

  const frame = (): void => {
    for (const msg of client.drain()) {
      applyServerMessage(model, msg);
    }
    advanceFrameEffects(model);
    renderScene(ctx, model, canvas.width, canvas.height);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

main();
