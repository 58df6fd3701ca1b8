// Browser entry point: wires the canvas, controls, and session socket.

import { SessionSocket } from "./net.js";
import { Answer, Relation, STATEMENT_RELATIONS } from "./protocol.js";
import { Camera, Ctx2D, render } from "./render.js";
import { SessionState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("map");
const ctx = canvas.getContext("2d") as unknown as Ctx2D;
const state = new SessionState();
const camera = new Camera();
const socket = new SessionSocket(
  (location.protocol === "https:" ? "wss://" : "ws://") + location.host);

const banner = el<HTMLDivElement>("query-banner");
const bannerText = el<HTMLSpanElement>("query-text");
const countdown = el<HTMLSpanElement>("query-countdown");
const statusLine = el<HTMLSpanElement>("status");
const noticeLine = el<HTMLDivElement>("notices");
const statementBox = el<HTMLDivElement>("statement-box");
const labelSelect = el<HTMLSelectElement>("stmt-label");
const relationSelect = el<HTMLSelectElement>("stmt-relation");

for (const rel of STATEMENT_RELATIONS) {
  const opt = document.createElement("option");
  opt.value = rel;
  opt.textContent = rel;
  relationSelect.appendChild(opt);
}

socket.onframe = (frame) => {
  state.ingest(frame);
  if (frame.type === "hello") {
    camera.scale = Math.min(canvas.width, canvas.height) / state.extent;
  }
};
socket.onstatus = (s) => {
  statusLine.textContent = s;
};
socket.connect();

// -- sketch drawing ---------------------------------------------------------

let drawing = false;
canvas.addEventListener("pointerdown", (ev) => {
  if (ev.shiftKey) return; // shift reserved for panning
  drawing = true;
  state.beginStroke(camera.toWorld([ev.offsetX, ev.offsetY], canvas.height));
});
canvas.addEventListener("pointermove", (ev) => {
  if (drawing) {
    state.extendStroke(camera.toWorld([ev.offsetX, ev.offsetY], canvas.height));
  } else if (ev.buttons === 1 && ev.shiftKey) {
    camera.pan(ev.movementX, ev.movementY);
  }
});
canvas.addEventListener("pointerup", () => {
  drawing = false;
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  camera.zoom(ev.deltaY < 0 ? 1.15 : 0.87, ev.offsetX, ev.offsetY, canvas.height);
});

el<HTMLButtonElement>("send-sketch").addEventListener("click", () => {
  const label = el<HTMLInputElement>("sketch-label").value;
  const deltaRaw = (document.querySelector(
    "input[name=delta]:checked") as HTMLInputElement | null)?.value;
  const delta = deltaRaw === "none" || deltaRaw === undefined ? null : Number(deltaRaw);
  const frame = state.composeSketch(label, delta);
  if (frame) socket.send(frame);
});
el<HTMLButtonElement>("clear-sketch").addEventListener("click", () => {
  state.clearStroke();
});

// -- statements ---------------------------------------------------------------

el<HTMLButtonElement>("send-statement").addEventListener("click", () => {
  const positive = el<HTMLSelectElement>("stmt-polarity").value === "is";
  const out = state.composeStatement(
    positive, relationSelect.value as Relation, labelSelect.value);
  if (out) socket.send(out.frame);
});

// -- query banner ---------------------------------------------------------------

function answerClick(answer: Answer) {
  const frame = state.composeAnswer(answer);
  if (frame) socket.send(frame);
}
el<HTMLButtonElement>("answer-yes").addEventListener("click", () => answerClick("yes"));
el<HTMLButtonElement>("answer-no").addEventListener("click", () => answerClick("no"));
el<HTMLButtonElement>("answer-idk").addEventListener("click", () =>
  answerClick("idontknow"));

// -- render loop ---------------------------------------------------------------

function tick() {
  render(ctx, state, camera);
  banner.style.display = state.queryBannerVisible() ? "block" : "none";
  if (state.pendingQuery) {
    bannerText.textContent = state.pendingQuery.text;
    countdown.textContent = `${Math.ceil(state.countdownSeconds())} s`;
  }
  statementBox.style.display = state.statementControlsVisible() ? "block" : "none";
  const labels = state.labels;
  if (labelSelect.options.length !== labels.length) {
    labelSelect.innerHTML = "";
    for (const name of labels) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      labelSelect.appendChild(opt);
    }
  }
  noticeLine.textContent = state.notices.slice(-3).join(" | ");
  requestAnimationFrame(tick);
}
requestAnimationFrame(tick);
