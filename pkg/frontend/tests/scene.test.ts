import { describe, expect, it } from "vitest";
import { CockpitScene, matrixFromRowMajor, psiHeat } from "../src/scene.js";
import { StateSnapshot } from "../src/protocol.js";

const snap = (x0: number[]): StateSnapshot => ({
  type: "state", tick: 1, t: 0.01,
  x0, r0: [1, 0, 0, 0, 1, 0, 0, 0, 1],
  quads: [{ x: [x0[0] + 0.3, x0[1], x0[2] + 0.5], r: [1, 0, 0, 0, 1, 0, 0, 0, 1] },
          { x: [x0[0] - 0.3, x0[1], x0[2] + 0.5], r: [1, 0, 0, 0, 1, 0, 0, 0, 1] }],
  q: [[0, 0, -1], [0, 0, -1]],
  psi_q: [0.0, 0.25], psi_r0: 0.01,
  leader_input: { phi: 0, theta: 0, f: 0.63 },
  sat: [false, false], seq: 1, armed: true, failsafe: false,
});

describe("psiHeat", () => {
  it("goes green to red as the error grows", () => {
    const good = psiHeat(0);
    const bad = psiHeat(0.5);
    expect(good.g).toBeGreaterThan(good.r);
    expect(bad.r).toBeGreaterThan(bad.g);
  });
});

describe("matrixFromRowMajor", () => {
  it("round-trips the identity", () => {
    const m = matrixFromRowMajor([1, 0, 0, 0, 1, 0, 0, 0, 1]);
    expect(m.determinant()).toBeCloseTo(1);
  });
});

describe("CockpitScene", () => {
  it("builds on first snapshot and follows the payload", () => {
    const scene = new CockpitScene();
    scene.update(snap([0, 0, 1]));
    scene.update(snap([1, 0, 1]));
    // chase camera looks near the payload
    expect(scene.chaseCamera.position.distanceTo(
      { x: 1, y: 0, z: 1 } as never)).toBeLessThan(4);
  });

  it("cable endpoints land at the attachment side of the cable", () => {
    const scene = new CockpitScene();
    const s = snap([0, 0, 1]);
    scene.update(s);
    const end = scene.cableEnd(s, 0);
    // q = -e3 and the quad sits 0.5 above the attachment
    expect(end.z).toBeCloseTo(1.0, 5);
    expect(end.x).toBeCloseTo(0.3, 5);
  });

  it("toggles between chase and top cameras", () => {
    const scene = new CockpitScene();
    const a = scene.activeCamera;
    scene.toggleCamera();
    expect(scene.activeCamera).not.toBe(a);
    scene.toggleCamera();
    expect(scene.activeCamera).toBe(a);
  });
});
