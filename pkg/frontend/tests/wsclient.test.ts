import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { CommandFrame } from "../src/protocol.js";
import { CockpitClient, Status, WebSocketLike } from "../src/wsclient.js";

class FakeSocket implements WebSocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  serverOpen(): void {
    this.onopen?.();
  }

  serverSend(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }

  serverDrop(): void {
    this.onclose?.();
  }
}

const snapshot = (tick: number, seq = -1) => ({
  type: "state", tick, t: tick / 100,
  x0: [0, 0, 1], r0: [1, 0, 0, 0, 1, 0, 0, 0, 1],
  quads: [{ x: [0, 0, 1.5], r: [1, 0, 0, 0, 1, 0, 0, 0, 1] }],
  q: [[0, 0, -1]], psi_q: [0], psi_r0: 0,
  leader_input: { phi: 0, theta: 0, f: 0.6 },
  sat: [false], seq, armed: true, failsafe: false,
});

describe("CockpitClient", () => {
  let sockets: FakeSocket[];
  let client: CockpitClient;
  let statuses: Status[];
  let snaps: number[];
  let errors: string[];

  const newClient = (channels = { phi: 0.1, theta: -0.05, thrust: 0.6 }) => {
    sockets = [];
    statuses = [];
    snaps = [];
    errors = [];
    client = new CockpitClient("ws://test/ws", () => channels, {
      onStatus: (s) => statuses.push(s),
      onSnapshot: (s) => snaps.push(s.tick),
      onError: (e) => errors.push(e.code),
    }, {
      wsFactory: () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      now: () => Date.now(),
    });
  };

  beforeEach(() => {
    vi.useFakeTimers();
    newClient();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("streams commands at 50 Hz with increasing sequence numbers", () => {
    client.connect();
    sockets[0].serverOpen();
    vi.advanceTimersByTime(1000);
    const frames = sockets[0].sent.map((s) => JSON.parse(s) as CommandFrame);
    expect(frames.length).toBeGreaterThanOrEqual(48);
    expect(frames.length).toBeLessThanOrEqual(52);
    for (let i = 1; i < frames.length; i++) {
      expect(frames[i].seq).toBe(frames[i - 1].seq + 1);
    }
    expect(frames[0].phi).toBeCloseTo(0.1);
    expect(frames[0].thrust).toBeCloseTo(0.6);
  });

  it("delivers validated snapshots and drops malformed ones", () => {
    client.connect();
    sockets[0].serverOpen();
    sockets[0].serverSend(snapshot(7));
    sockets[0].onmessage?.({ data: "garbage{{" });
    sockets[0].serverSend({ type: "state", bad: true });
    expect(snaps).toEqual([7]);
  });

  it("surfaces error frames", () => {
    client.connect();
    sockets[0].serverOpen();
    sockets[0].serverSend({ type: "err", code: "stale_seq", detail: "old" });
    expect(errors).toEqual(["stale_seq"]);
  });

  it("flags stale telemetry after the configured window", () => {
    client.connect();
    sockets[0].serverOpen();
    sockets[0].serverSend(snapshot(1));
    vi.advanceTimersByTime(500);   // no further snapshots arrive
    expect(statuses).toContain("stale");
    sockets[0].serverSend(snapshot(2));
    expect(client.currentStatus).toBe("live");
  });

  it("stops sending on drop, reports disconnect, reconnects, resumes", () => {
    client.connect();
    sockets[0].serverOpen();
    vi.advanceTimersByTime(100);
    const sentBefore = sockets[0].sent.length;
    expect(sentBefore).toBeGreaterThan(0);

    sockets[0].serverDrop();
    expect(statuses).toContain("disconnected");
    vi.advanceTimersByTime(300);   // input disabled while down
    expect(sockets[0].sent.length).toBe(sentBefore);

    vi.advanceTimersByTime(1000);  // reconnect timer fires
    expect(sockets.length).toBe(2);
    sockets[1].serverOpen();
    vi.advanceTimersByTime(100);
    expect(sockets[1].sent.length).toBeGreaterThan(0);
    const first = JSON.parse(sockets[1].sent[0]) as CommandFrame;
    const last = JSON.parse(sockets[0].sent[sentBefore - 1]) as CommandFrame;
    expect(first.seq).toBeGreaterThan(last.seq);  // seq survives reconnect
  });

  it("attaches one-shot flags to exactly one command", () => {
    client.connect();
    sockets[0].serverOpen();
    client.flag({ reset: true });
    vi.advanceTimersByTime(60);
    const frames = sockets[0].sent.map((s) => JSON.parse(s) as CommandFrame);
    expect(frames.filter((f) => f.reset).length).toBe(1);
  });

  it("close() stops everything for good", () => {
    client.connect();
    sockets[0].serverOpen();
    vi.advanceTimersByTime(40);
    client.close();
    const n = sockets[0].sent.length;
    vi.advanceTimersByTime(3000);
    expect(sockets[0].sent.length).toBe(n);
    expect(sockets.length).toBe(1);   // no reconnect after explicit close
    expect(sockets[0].closed).toBe(true);
  });
});
