// Canvas and DOM rendering: top-down trajectory, height bar, reward
// counter, and the 4x5 embedding block grid.

import { embeddingBlocks, type ConsoleState } from "./state.js";
import { LEVEL_ORDER, PROPERTY_ORDER } from "./types.js";

export function drawTrajectory(canvas: HTMLCanvasElement, state: ConsoleState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);

  ctx.strokeStyle = "#2d3748";
  ctx.beginPath();
  ctx.moveTo(30, height / 2);
  ctx.lineTo(width - 8, height / 2);
  ctx.stroke();

  const trail = state.trail;
  if (!trail.length) return;
  let minX = 0;
  let maxX = 1;
  for (const p of trail) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
  }
  const spanX = Math.max(maxX - minX, 1e-6);
  const yScale = height / 4; // +-2 m of lateral deviation fills the canvas
  const toPx = (p: { x: number; y: number }) => ({
    px: 30 + ((p.x - minX) / spanX) * (width - 46),
    py: height / 2 - p.y * yScale,
  });

  ctx.strokeStyle = "#63b3ed";
  ctx.lineWidth = 2;
  ctx.beginPath();
  trail.forEach((p, i) => {
    const { px, py } = toPx(p);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();

  ctx.fillStyle = "#f6ad55";
  for (const p of trail) {
    if (!p.switch) continue;
    const { px, py } = toPx(p);
    ctx.beginPath();
    ctx.arc(px, py, 4, 0, Math.PI * 2);
    ctx.fill();
  }

  const head = toPx(trail[trail.length - 1]);
  ctx.fillStyle = "#68d391";
  ctx.beginPath();
  ctx.arc(head.px, head.py, 5, 0, Math.PI * 2);
  ctx.fill();
}

export function drawHeightBar(element: HTMLElement, state: ConsoleState): void {
  const h = state.latest?.h ?? 0.5;
  const fraction = Math.max(0, Math.min(1, h / 0.6));
  const fill = element.querySelector<HTMLElement>(".height-fill");
  if (fill) fill.style.height = `${(fraction * 100).toFixed(1)}%`;
  const label = element.querySelector<HTMLElement>(".height-label");
  if (label) label.textContent = `h ${h.toFixed(3)} m`;
}

export function renderTelemetry(element: HTMLElement, state: ConsoleState): void {
  const t = state.latest?.t ?? 0;
  const x = state.latest?.x ?? 0;
  element.querySelector<HTMLElement>(".tele-t")!.textContent = String(t);
  element.querySelector<HTMLElement>(".tele-x")!.textContent = x.toFixed(2);
  element.querySelector<HTMLElement>(".tele-reward")!.textContent =
    state.rewardCumulative.toFixed(3);
  const badge = element.querySelector<HTMLElement>(".status-badge")!;
  badge.textContent = state.status;
  badge.dataset.status = state.status;
  const conn = element.querySelector<HTMLElement>(".conn-badge")!;
  conn.textContent = state.connection;
  conn.dataset.connection = state.connection;
}

export function renderEmbeddingBlocks(container: HTMLElement, embedding: number[]): void {
  container.innerHTML = "";
  if (embedding.length !== PROPERTY_ORDER.length * LEVEL_ORDER.length) {
    const note = document.createElement("div");
    note.className = "blocks-note";
    note.textContent = embedding.length
      ? `context vector (${embedding.length} entries)`
      : "no context input";
    container.appendChild(note);
    return;
  }
  const blocks = embeddingBlocks(embedding, PROPERTY_ORDER, LEVEL_ORDER);
  for (const block of blocks) {
    const row = document.createElement("div");
    row.className = "block-row";
    const label = document.createElement("span");
    label.className = "block-label";
    label.textContent = block[0].property;
    row.appendChild(label);
    for (const cell of block) {
      const el = document.createElement("span");
      el.className = "block-cell" + (cell.active ? " active" : "");
      el.title = `${cell.property} ${cell.level}`;
      row.appendChild(el);
    }
    container.appendChild(row);
  }
}
