// Three.js scene mirroring the latest state snapshot: payload, quads,
// cables colored by their configuration error, payload trail, and two
// cameras (perspective chase plus orthographic top view). The renderer is
// owned by main.ts; everything here works headless for tests.

import * as THREE from "three";
import { StateSnapshot } from "./protocol.js";

/** Green at zero error through yellow to red at psi >= 0.3. */
export function psiHeat(psi: number): THREE.Color {
  const x = Math.min(1, Math.max(0, psi / 0.3));
  return new THREE.Color().setHSL((1 - x) * 0.33, 1.0, 0.5);
}

export function matrixFromRowMajor(r: number[]): THREE.Matrix4 {
  const m = new THREE.Matrix4();
  m.set(r[0], r[1], r[2], 0,
        r[3], r[4], r[5], 0,
        r[6], r[7], r[8], 0,
        0, 0, 0, 1);
  return m;
}

export class CockpitScene {
  readonly scene = new THREE.Scene();
  readonly chaseCamera = new THREE.PerspectiveCamera(50, 16 / 9, 0.01, 100);
  readonly topCamera = new THREE.OrthographicCamera(-3, 3, 3, -3, 0.01, 100);
  activeCamera: THREE.Camera = this.chaseCamera;
  trailLength = 600;

  private payload: THREE.Object3D | null = null;
  private quads: THREE.Object3D[] = [];
  private cables: THREE.Line[] = [];
  private trail: THREE.Line | null = null;
  private trailPoints: THREE.Vector3[] = [];
  private built = false;

  constructor() {
    this.scene.background = new THREE.Color(0x0b0e11);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2, 3, 5);
    this.scene.add(sun);
    const grid = new THREE.GridHelper(10, 20, 0x335533, 0x223322);
    grid.rotation.x = Math.PI / 2; // world z is up
    this.scene.add(grid);
    this.topCamera.position.set(0, 0, 8);
    this.topCamera.up.set(0, 1, 0);
    this.topCamera.lookAt(0, 0, 0);
  }

  toggleCamera(): void {
    this.activeCamera = this.activeCamera === this.chaseCamera
      ? this.topCamera : this.chaseCamera;
  }

  private build(n: number): void {
    const payloadGeom = n === 2
      ? new THREE.BoxGeometry(0.6, 0.03, 0.01)
      : new THREE.CylinderGeometry(0.35, 0.35, 0.01, 3);
    const payload = new THREE.Mesh(
      payloadGeom, new THREE.MeshStandardMaterial({ color: 0xcc8833 }));
    if (n !== 2) payload.rotation.x = Math.PI / 2;
    const holder = new THREE.Group();
    holder.add(payload);
    this.payload = holder;
    this.scene.add(holder);

    for (let i = 0; i < n; i++) {
      const body = new THREE.Group();
      const color = i === 0 ? 0x4488ff : 0x88ccee;
      const hub = new THREE.Mesh(new THREE.BoxGeometry(0.1, 0.1, 0.02),
                                 new THREE.MeshStandardMaterial({ color }));
      body.add(hub);
      for (const [dx, dy] of [[0.07, 0.07], [-0.07, 0.07], [0.07, -0.07], [-0.07, -0.07]]) {
        const rotor = new THREE.Mesh(
          new THREE.CylinderGeometry(0.035, 0.035, 0.005, 12),
          new THREE.MeshStandardMaterial({ color: 0x334455 }));
        rotor.rotation.x = Math.PI / 2;
        rotor.position.set(dx, dy, 0.015);
        body.add(rotor);
      }
      this.quads.push(body);
      this.scene.add(body);

      const cableGeom = new THREE.BufferGeometry().setFromPoints(
        [new THREE.Vector3(), new THREE.Vector3()]);
      const cable = new THREE.Line(
        cableGeom, new THREE.LineBasicMaterial({ color: 0x00ff00 }));
      this.cables.push(cable);
      this.scene.add(cable);
    }

    const trailGeom = new THREE.BufferGeometry();
    this.trail = new THREE.Line(
      trailGeom, new THREE.LineBasicMaterial({ color: 0xcc8833 }));
    this.scene.add(this.trail);
    this.built = true;
  }

  update(snap: StateSnapshot): void {
    const n = snap.quads.length;
    if (!this.built) this.build(n);

    const payload = this.payload!;
    payload.position.set(snap.x0[0], snap.x0[1], snap.x0[2]);
    payload.setRotationFromMatrix(matrixFromRowMajor(snap.r0));

    for (let i = 0; i < n; i++) {
      const quad = this.quads[i];
      const pose = snap.quads[i];
      quad.position.set(pose.x[0], pose.x[1], pose.x[2]);
      quad.setRotationFromMatrix(matrixFromRowMajor(pose.r));

      const geom = this.cables[i].geometry as THREE.BufferGeometry;
      const end = this.cableEnd(snap, i);
      geom.setFromPoints([new THREE.Vector3(pose.x[0], pose.x[1], pose.x[2]), end]);
      (this.cables[i].material as THREE.LineBasicMaterial).color =
        psiHeat(snap.psi_q[i]);
    }

    this.trailPoints.push(new THREE.Vector3(snap.x0[0], snap.x0[1], snap.x0[2]));
    if (this.trailPoints.length > this.trailLength) this.trailPoints.shift();
    (this.trail!.geometry as THREE.BufferGeometry).setFromPoints(this.trailPoints);

    const cam = this.chaseCamera;
    cam.up.set(0, 0, 1);
    cam.position.set(snap.x0[0] - 1.8, snap.x0[1] - 1.8, snap.x0[2] + 1.1);
    cam.lookAt(snap.x0[0], snap.x0[1], snap.x0[2]);
    this.topCamera.position.set(snap.x0[0], snap.x0[1], snap.x0[2] + 8);
    this.topCamera.lookAt(snap.x0[0], snap.x0[1], snap.x0[2]);
  }

  /** Cable attachment end: quad position plus cable length along q. */
  cableEnd(snap: StateSnapshot, i: number): THREE.Vector3 {
    const pose = snap.quads[i];
    const q = snap.q[i];
    // cable length from geometry: |quad -> attachment| with attachment at
    // x0 + R0 rho; reconstruct via the payload frame offset implied by q
    const dx = snap.x0[0] - pose.x[0];
    const dy = snap.x0[1] - pose.x[1];
    const dz = snap.x0[2] - pose.x[2];
    const proj = dx * q[0] + dy * q[1] + dz * q[2];
    const len = Math.max(0.05, proj);
    return new THREE.Vector3(
      pose.x[0] + q[0] * len, pose.x[1] + q[1] * len, pose.x[2] + q[2] * len);
  }

  resize(aspect: number): void {
    this.chaseCamera.aspect = aspect;
    this.chaseCamera.updateProjectionMatrix();
  }
}
