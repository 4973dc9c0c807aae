/**
 * Websocket client with a frame-drained inbound queue.
 *
 * Incoming messages are decoded and queued; the render loop drains the
 * queue once per animation frame and applies the batch, so the scene
 * updates atomically per frame and the queue cannot grow while a consumer
 * is attached.
 */

import {
  decodeServerMessage,
  encodeAim,
  encodeRelease,
  encodeReset,
  encodeSetPolicy,
  type ServerMsg,
  type Vec3,
} from "./protocol.js";

/** The subset of the WebSocket API the client touches (browser or ws). */
export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open", listener: () => void): void;
  addEventListener(type: "close", listener: () => void): void;
  addEventListener(type: "message", listener: (ev: { data: unknown }) => void): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

const QUEUE_CAP = 4096; // ~3 min of telemetry; a stalled consumer drops oldest

export type ConnectionState = "connecting" | "open" | "closed";

export class GameClient {
  readonly url: string;
  state: ConnectionState = "connecting";
  private readonly socket: WebSocketLike;
  private queue: ServerMsg[] = [];
  /** Frames dropped because the consumer stalled (diagnostic counter). */
  dropped = 0;

  constructor(url: string, factory?: WebSocketFactory) {
    this.url = url;
    const make: WebSocketFactory =
      factory ?? ((u) => new WebSocket(u) as unknown as WebSocketLike);
    this.socket = make(url);
    this.socket.addEventListener("open", () => {
      this.state = "open";
    });
    this.socket.addEventListener("close", () => {
      this.state = "closed";
    });
    this.socket.addEventListener("message", (ev) => {
      if (typeof ev.data !== "string") {
        console.warn("dropping binary frame");
        return;
      }
      const msg = decodeServerMessage(ev.data);
      if (msg === null) return;
      this.queue.push(msg);
      if (this.queue.length > QUEUE_CAP) {
        this.dropped += this.queue.length - QUEUE_CAP;
        this.queue.splice(0, this.queue.length - QUEUE_CAP);
      }
    });
  }

  /** Take everything received since the last drain (applied once per frame). */
  drain(): ServerMsg[] {
    if (this.queue.length === 0) return [];
    const batch = this.queue;
    this.queue = [];
    return batch;
  }

  get queueLength(): number {
    return this.queue.length;
  }

  sendAim(pBow: Vec3, pArrow: Vec3): void {
    this.socket.send(encodeAim(pBow, pArrow));
  }

  sendRelease(): void {
    this.socket.send(encodeRelease());
  }

  sendReset(): void {
    this.socket.send(encodeReset());
  }

  sendSetPolicy(policy: "drl" | "apf"): void {
    this.socket.send(encodeSetPolicy(policy));
  }

  close(): void {
    this.socket.close();
  }
}
