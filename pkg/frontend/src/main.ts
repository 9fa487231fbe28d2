// Cockpit entry point: renderer, HUD, input wiring, command streaming.
// Input runs at the protocol rate (50 Hz) regardless of render framerate.

import * as THREE from "three";
import { DEFAULT_BINDINGS, KeyboardAxes, RawAxes, channelsFrom,
         gamepadAxes } from "./bindings.js";
import { StripChart } from "./charts.js";
import { StateSnapshot } from "./protocol.js";
import { CockpitScene } from "./scene.js";
import { CockpitClient, Status } from "./wsclient.js";

const view = document.getElementById("view") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const hud = document.getElementById("hud") as HTMLDivElement;

const renderer = new THREE.WebGLRenderer({ canvas: view, antialias: true });
const scene = new CockpitScene();

const keyboard = new KeyboardAxes();
let gamepadIndex: number | null = null;

window.addEventListener("gamepadconnected", (e) => {
  gamepadIndex = (e as GamepadEvent).gamepad.index;
});
window.addEventListener("gamepaddisconnected", () => {
  gamepadIndex = null;
});

function readAxes(): RawAxes {
  if (gamepadIndex !== null) {
    const pad = navigator.getGamepads()[gamepadIndex];
    if (pad) return gamepadAxes(pad.axes);
  }
  return keyboard.read();
}

const psiChart = new StripChart(
  document.getElementById("chart-psi") as HTMLCanvasElement,
  "configuration error", 30);
const psiR = psiChart.addSeries({ label: "psi_R0", color: "#ff7043" });
const psiQ = psiChart.addSeries({ label: "max psi_q", color: "#42a5f5" });

const posChart = new StripChart(
  document.getElementById("chart-pos") as HTMLCanvasElement,
  "payload position [m]", 30);
const posX = posChart.addSeries({ label: "x", color: "#ef5350" });
const posY = posChart.addSeries({ label: "y", color: "#66bb6a" });
const posZ = posChart.addSeries({ label: "z", color: "#42a5f5" });

function onSnapshot(snap: StateSnapshot): void {
  scene.update(snap);
  psiR.push(snap.t, snap.psi_r0);
  psiQ.push(snap.t, Math.max(...snap.psi_q));
  posX.push(snap.t, snap.x0[0]);
  posY.push(snap.t, snap.x0[1]);
  posZ.push(snap.t, snap.x0[2]);
  const li = snap.leader_input;
  hud.textContent =
    `t=${snap.t.toFixed(2)}s  seq=${snap.seq}  ` +
    `leader phi=${li.phi.toFixed(3)} theta=${li.theta.toFixed(3)} f=${li.f.toFixed(3)}N  ` +
    `${snap.armed ? "ARMED" : "DISARMED"}${snap.failsafe ? "  FAILSAFE" : ""}` +
    `${snap.sat.some(Boolean) ? "  SAT" : ""}`;
}

function onStatus(status: Status): void {
  if (status === "live") {
    banner.className = "hidden";
  } else {
    banner.className = "shown";
    banner.textContent = status === "stale"
      ? "STALE TELEMETRY (holding last state)"
      : status === "connecting" ? "CONNECTING..." : "LINK LOST: failsafe to hover, input disabled";
  }
}

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const client = new CockpitClient(
  wsUrl, () => channelsFrom(readAxes(), DEFAULT_BINDINGS),
  { onSnapshot, onStatus });
client.connect();

window.addEventListener("keydown", (e) => {
  if (keyboard.keyEvent(e.key, true)) e.preventDefault();
  if (e.key === "c") scene.toggleCamera();
  if (e.key === " ") client.flag({ reset: true });
  if (e.key === "Escape") client.flag({ disarm: true });
  if (e.key === "Enter") client.flag({ arm: true });
});
window.addEventListener("keyup", (e) => {
  if (keyboard.keyEvent(e.key, false)) e.preventDefault();
});

function resize(): void {
  const w = view.clientWidth;
  const h = view.clientHeight;
  renderer.setSize(w, h, false);
  scene.resize(w / Math.max(1, h));
}
window.addEventListener("resize", resize);
resize();

function render(): void {
  renderer.render(scene.scene, scene.activeCamera);
  psiChart.draw();
  posChart.draw();
  requestAnimationFrame(render);
}
requestAnimationFrame(render);
