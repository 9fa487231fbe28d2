// WebSocket session with the teleop service: validates inbound frames,
// streams commands at a fixed rate decoupled from rendering, tracks
// staleness, and disables input until reconnect after a drop.

import { Channels, CommandFrame, ErrFrame, StateSnapshot, makeCommand,
         parseFrame } from "./protocol.js";

export type Status = "connecting" | "live" | "stale" | "disconnected";

export interface ClientEvents {
  onSnapshot?: (snap: StateSnapshot) => void;
  onError?: (err: ErrFrame) => void;
  onStatus?: (status: Status) => void;
}

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface ClientOptions {
  sendHz?: number;
  staleMs?: number;
  reconnectMs?: number;
  wsFactory?: (url: string) => WebSocketLike;
  now?: () => number;
}

export class CockpitClient {
  readonly sendHz: number;
  readonly staleMs: number;
  private readonly reconnectMs: number;
  private readonly wsFactory: (url: string) => WebSocketLike;
  private readonly now: () => number;
  private ws: WebSocketLike | null = null;
  private seq = 0;
  private sendTimer: ReturnType<typeof setInterval> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private lastSnapshotAt = -Infinity;
  private open = false;
  private closed = false;
  private status: Status = "disconnected";
  private pendingFlags: Partial<CommandFrame> = {};
  lastSnapshot: StateSnapshot | null = null;

  constructor(private readonly url: string,
              private readonly getChannels: () => Channels,
              private readonly events: ClientEvents = {},
              opts: ClientOptions = {}) {
    this.sendHz = opts.sendHz ?? 50;
    this.staleMs = opts.staleMs ?? 200;
    this.reconnectMs = opts.reconnectMs ?? 1000;
    this.wsFactory = opts.wsFactory
      ?? ((u) => new WebSocket(u) as unknown as WebSocketLike);
    this.now = opts.now ?? (() => Date.now());
  }

  get connected(): boolean {
    return this.open;
  }

  get currentStatus(): Status {
    return this.status;
  }

  /** Age of the last accepted snapshot in ms (Infinity before the first). */
  snapshotAge(): number {
    return this.now() - this.lastSnapshotAt;
  }

  connect(): void {
    this.closed = false;
    this.setStatus("connecting");
    const ws = this.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.open = true;
      this.setStatus("live");
      this.startSendLoop();
    };
    ws.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (!frame) return; // render only validated snapshots
      if (frame.type === "err") {
        this.events.onError?.(frame);
        return;
      }
      this.lastSnapshotAt = this.now();
      this.lastSnapshot = frame;
      if (this.status === "stale") this.setStatus("live");
      this.events.onSnapshot?.(frame);
    };
    ws.onclose = () => this.handleDrop();
    ws.onerror = () => this.handleDrop();
  }

  close(): void {
    this.closed = true;
    this.stopSendLoop();
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.ws?.close();
    this.ws = null;
    this.open = false;
    this.setStatus("disconnected");
  }

  /** Queue one-shot flags (arm/disarm/reset) onto the next command. */
  flag(flags: Partial<CommandFrame>): void {
    Object.assign(this.pendingFlags, flags);
  }

  private handleDrop(): void {
    if (!this.open && this.status !== "connecting") return;
    this.open = false;
    this.stopSendLoop(); // input disabled until reconnect
    this.setStatus("disconnected");
    if (!this.closed) {
      this.reconnectTimer = setTimeout(() => this.connect(), this.reconnectMs);
    }
  }

  private startSendLoop(): void {
    this.stopSendLoop();
    this.sendTimer = setInterval(() => this.tick(), 1000 / this.sendHz);
  }

  private stopSendLoop(): void {
    if (this.sendTimer) {
      clearInterval(this.sendTimer);
      this.sendTimer = null;
    }
  }

  private tick(): void {
    if (!this.open || !this.ws) return;
    if (this.snapshotAge() > this.staleMs && this.status === "live") {
      this.setStatus("stale");
    }
    const cmd = makeCommand(++this.seq, this.getChannels(), this.pendingFlags);
    this.pendingFlags = {};
    this.ws.send(JSON.stringify(cmd));
  }

  private setStatus(status: Status): void {
    if (status === this.status) return;
    this.status = status;
    this.events.onStatus?.(status);
  }
}
