// Wire protocol shared with the teleop service: one inbound command frame,
// state snapshots and error frames outbound. The cockpit never mutates the
// simulation except by sending command frames.

export const ANGLE_BOUND = 0.35; // rad, must match the service's clamp

export interface LeaderInput {
  phi: number;
  theta: number;
  f: number;
}

export interface QuadPose {
  x: number[];
  r: number[]; // 3x3 row-major
}

export interface StateSnapshot {
  type: "state";
  tick: number;
  t: number;
  x0: number[];
  r0: number[];
  quads: QuadPose[];
  q: number[][];
  psi_q: number[];
  psi_r0: number;
  leader_input: LeaderInput;
  sat: boolean[];
  seq: number;
  armed: boolean;
  failsafe: boolean;
}

export interface ErrFrame {
  type: "err";
  code: string;
  detail: string;
}

export interface CommandFrame {
  type: "cmd";
  seq: number;
  t_ms: number;
  phi: number;
  theta: number;
  thrust: number;
  arm?: boolean;
  disarm?: boolean;
  reset?: boolean;
}

export interface Channels {
  phi: number;
  theta: number;
  thrust: number; // normalized [0, 1]
}

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, v));

/** Clamp raw channel values into the bounds the service accepts. */
export function clampChannels(c: Channels): Channels {
  return {
    phi: clamp(Number.isFinite(c.phi) ? c.phi : 0, -ANGLE_BOUND, ANGLE_BOUND),
    theta: clamp(Number.isFinite(c.theta) ? c.theta : 0, -ANGLE_BOUND, ANGLE_BOUND),
    thrust: clamp(Number.isFinite(c.thrust) ? c.thrust : 0.5, 0, 1),
  };
}

export function makeCommand(seq: number, c: Channels,
                            flags: Partial<CommandFrame> = {}): CommandFrame {
  const b = clampChannels(c);
  return { type: "cmd", seq, t_ms: Date.now(), ...b, ...flags };
}

const vec = (x: unknown, n: number): x is number[] =>
  Array.isArray(x) && x.length === n && x.every((v) => Number.isFinite(v));

/** Parse and validate a server frame; null for anything malformed. */
export function parseFrame(text: string): StateSnapshot | ErrFrame | null {
  let data: any;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (data?.type === "err" && typeof data.code === "string") {
    return data as ErrFrame;
  }
  if (data?.type !== "state") return null;
  if (!vec(data.x0, 3) || !vec(data.r0, 9)) return null;
  if (!Array.isArray(data.quads) || !Array.isArray(data.q)) return null;
  if (data.quads.length !== data.q.length) return null;
  for (const quad of data.quads) {
    if (!vec(quad?.x, 3) || !vec(quad?.r, 9)) return null;
  }
  for (const qi of data.q) {
    if (!vec(qi, 3)) return null;
  }
  if (!vec(data.psi_q, data.q.length) || !Number.isFinite(data.psi_r0)) return null;
  const li = data.leader_input;
  if (!li || ![li.phi, li.theta, li.f].every(Number.isFinite)) return null;
  if (!Number.isFinite(data.tick) || !Number.isFinite(data.t)) return null;
  return data as StateSnapshot;
}
