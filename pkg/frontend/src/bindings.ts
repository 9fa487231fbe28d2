// Device input shaping: keyboard or gamepad axes map onto the leader
// channels (roll, pitch, thrust) through a deadzone, an expo curve, and a
// scale, and the result is always clamped to the protocol bounds.

import { ANGLE_BOUND, Channels, clampChannels } from "./protocol.js";

export interface AxisBinding {
  scale: number;    // fraction of full deflection, (0, 1]
  deadzone: number; // [0, 0.2]
  expo: number;     // 0 linear .. 1 cubic
  invert?: boolean;
}

export interface BindingSet {
  phi: AxisBinding;
  theta: AxisBinding;
  thrust: AxisBinding;
}

export const DEFAULT_BINDINGS: BindingSet = {
  phi: { scale: 0.6, deadzone: 0.05, expo: 0.3 },
  theta: { scale: 0.6, deadzone: 0.05, expo: 0.3 },
  thrust: { scale: 1.0, deadzone: 0.05, expo: 0.0 },
};

export function validateBinding(b: AxisBinding): AxisBinding {
  if (!(b.deadzone >= 0 && b.deadzone <= 0.2)) {
    throw new Error(`deadzone ${b.deadzone} outside [0, 0.2]`);
  }
  if (!(b.scale > 0 && b.scale <= 1)) {
    throw new Error(`scale ${b.scale} outside (0, 1]`);
  }
  if (!(b.expo >= 0 && b.expo <= 1)) {
    throw new Error(`expo ${b.expo} outside [0, 1]`);
  }
  return b;
}

/** Shape one raw axis in [-1, 1]: deadzone, renormalize, expo, scale. */
export function shapeAxis(raw: number, b: AxisBinding): number {
  if (!Number.isFinite(raw)) return 0;
  let x = Math.min(1, Math.max(-1, raw));
  if (b.invert) x = -x;
  const a = Math.abs(x);
  if (a <= b.deadzone) return 0;
  const y = (a - b.deadzone) / (1 - b.deadzone);
  const shaped = (1 - b.expo) * y + b.expo * y * y * y;
  return Math.sign(x) * shaped * b.scale;
}

/** Raw stick state in [-1, 1] per channel (thrust raw 0 means mid stick). */
export interface RawAxes {
  roll: number;
  pitch: number;
  throttle: number;
}

/** Shaped axes to protocol channels; thrust mid-stick maps to hover (0.5). */
export function channelsFrom(raw: RawAxes, bindings: BindingSet): Channels {
  for (const b of [bindings.phi, bindings.theta, bindings.thrust]) {
    validateBinding(b);
  }
  return clampChannels({
    phi: shapeAxis(raw.roll, bindings.phi) * ANGLE_BOUND,
    theta: shapeAxis(raw.pitch, bindings.theta) * ANGLE_BOUND,
    thrust: 0.5 + 0.5 * shapeAxis(raw.throttle, bindings.thrust),
  });
}

const KEY_AXES: Record<string, [keyof RawAxes, number]> = {
  w: ["pitch", 1], s: ["pitch", -1],
  a: ["roll", -1], d: ["roll", 1],
  r: ["throttle", 1], f: ["throttle", -1],
  ArrowUp: ["pitch", 1], ArrowDown: ["pitch", -1],
  ArrowLeft: ["roll", -1], ArrowRight: ["roll", 1],
};

/** Tracks held keys as full-deflection axes; shaping handles the rest. */
export class KeyboardAxes {
  private held = new Map<keyof RawAxes, Set<string>>([
    ["roll", new Set()], ["pitch", new Set()], ["throttle", new Set()],
  ]);
  private direction = new Map<string, number>();

  keyEvent(key: string, down: boolean): boolean {
    const hit = KEY_AXES[key];
    if (!hit) return false;
    const [axis, dir] = hit;
    if (down) {
      this.held.get(axis)!.add(key);
      this.direction.set(key, dir);
    } else {
      this.held.get(axis)!.delete(key);
    }
    return true;
  }

  read(): RawAxes {
    const value = (axis: keyof RawAxes) => {
      let v = 0;
      for (const key of this.held.get(axis)!) v += this.direction.get(key)!;
      return Math.min(1, Math.max(-1, v));
    };
    return { roll: value("roll"), pitch: value("pitch"), throttle: value("throttle") };
  }
}

/** Standard-mapping gamepad sticks: left = roll/pitch, right Y = throttle. */
export function gamepadAxes(axes: ReadonlyArray<number>): RawAxes {
  return {
    roll: axes[0] ?? 0,
    pitch: -(axes[1] ?? 0),
    throttle: -(axes[3] ?? 0),
  };
}
