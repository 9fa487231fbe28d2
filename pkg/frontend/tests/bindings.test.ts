import { describe, expect, it } from "vitest";
import { ANGLE_BOUND } from "../src/protocol.js";
import { DEFAULT_BINDINGS, KeyboardAxes, channelsFrom, gamepadAxes,
         shapeAxis, validateBinding } from "../src/bindings.js";

describe("validateBinding", () => {
  it("rejects deadzones outside [0, 0.2]", () => {
    expect(() => validateBinding({ scale: 1, deadzone: 0.3, expo: 0 })).toThrow();
    expect(() => validateBinding({ scale: 1, deadzone: -0.1, expo: 0 })).toThrow();
    expect(validateBinding({ scale: 1, deadzone: 0.2, expo: 0 })).toBeTruthy();
  });

  it("rejects bad scale and expo", () => {
    expect(() => validateBinding({ scale: 0, deadzone: 0, expo: 0 })).toThrow();
    expect(() => validateBinding({ scale: 1, deadzone: 0, expo: 2 })).toThrow();
  });
});

describe("shapeAxis", () => {
  const b = { scale: 1, deadzone: 0.1, expo: 0.5 };

  it("is zero inside the deadzone and continuous at its edge", () => {
    expect(shapeAxis(0.05, b)).toBe(0);
    expect(shapeAxis(-0.1, b)).toBe(0);
    expect(Math.abs(shapeAxis(0.100001, b))).toBeLessThan(1e-4);
  });

  it("reaches full scale at full deflection and is odd", () => {
    expect(shapeAxis(1, b)).toBeCloseTo(1);
    expect(shapeAxis(-1, b)).toBeCloseTo(-1);
    for (const x of [0.2, 0.5, 0.9]) {
      expect(shapeAxis(-x, b)).toBeCloseTo(-shapeAxis(x, b));
    }
  });

  it("expo softens the center", () => {
    const linear = { scale: 1, deadzone: 0, expo: 0 };
    const curved = { scale: 1, deadzone: 0, expo: 1 };
    expect(shapeAxis(0.5, curved)).toBeLessThan(shapeAxis(0.5, linear));
  });

  it("saturates out-of-range and repairs NaN", () => {
    expect(shapeAxis(5, b)).toBeCloseTo(1);
    expect(shapeAxis(NaN, b)).toBe(0);
  });
});

describe("channelsFrom", () => {
  it("always lands inside the protocol bounds for any raw input", () => {
    let s = 123456789;
    const rand = () => {
      s = (s * 1103515245 + 12345) % 2147483648;
      return (s / 1073741824) - 1; // [-1, 1)
    };
    for (let k = 0; k < 2000; k++) {
      const raw = { roll: rand() * 3, pitch: rand() * 3, throttle: rand() * 3 };
      const c = channelsFrom(raw, DEFAULT_BINDINGS);
      expect(Math.abs(c.phi)).toBeLessThanOrEqual(ANGLE_BOUND);
      expect(Math.abs(c.theta)).toBeLessThanOrEqual(ANGLE_BOUND);
      expect(c.thrust).toBeGreaterThanOrEqual(0);
      expect(c.thrust).toBeLessThanOrEqual(1);
    }
  });

  it("neutral sticks give zero tilt and hover thrust", () => {
    const c = channelsFrom({ roll: 0, pitch: 0, throttle: 0 }, DEFAULT_BINDINGS);
    expect(c.phi).toBe(0);
    expect(c.theta).toBe(0);
    expect(c.thrust).toBe(0.5);
  });
});

describe("KeyboardAxes", () => {
  it("maps held keys to deflections and releases cleanly", () => {
    const kb = new KeyboardAxes();
    expect(kb.keyEvent("w", true)).toBe(true);
    expect(kb.read().pitch).toBe(1);
    kb.keyEvent("s", true);
    expect(kb.read().pitch).toBe(0); // opposing keys cancel
    kb.keyEvent("w", false);
    expect(kb.read().pitch).toBe(-1);
    kb.keyEvent("s", false);
    expect(kb.read().pitch).toBe(0);
  });

  it("ignores unmapped keys", () => {
    const kb = new KeyboardAxes();
    expect(kb.keyEvent("q", true)).toBe(false);
    expect(kb.read()).toEqual({ roll: 0, pitch: 0, throttle: 0 });
  });
});

describe("gamepadAxes", () => {
  it("uses the standard stick mapping with inverted Y", () => {
    const raw = gamepadAxes([0.5, -0.25, 0, -0.8]);
    expect(raw.roll).toBe(0.5);
    expect(raw.pitch).toBe(0.25);
    expect(raw.throttle).toBe(0.8);
  });

  it("tolerates short axis arrays", () => {
    expect(gamepadAxes([])).toEqual({ roll: 0, pitch: -0, throttle: -0 });
  });
});
