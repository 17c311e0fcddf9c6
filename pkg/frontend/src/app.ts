/** Browser entry point: render the feed table, charts and tuning sliders. */

import { ConsoleClient } from "./client.js";
import { Console } from "./console.js";
import { likelihoodSeries, renderFeed, scoreSeries } from "./feed.js";
import { ConsoleState, PendingEdit } from "./state.js";
import { TUNABLE_FIELDS, TunableField } from "./types.js";

const SLIDER_RANGES: Record<TunableField, { min: number; max: number; step: number }> = {
  td: { min: 0.01, max: 0.99, step: 0.01 },
  tp: { min: 0.01, max: 0.99, step: 0.01 },
  duration_required: { min: 1, max: 10, step: 1 },
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function drawChart(
  canvas: HTMLCanvasElement,
  points: { value: number; threshold: number }[],
  color: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (points.length === 0) {
    return;
  }
  const x = (i: number) => (i / Math.max(points.length - 1, 1)) * width;
  const y = (v: number) => height - v * height;
  ctx.strokeStyle = "#888";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(0, y(points[0].threshold));
  ctx.lineTo(width, y(points[points.length - 1].threshold));
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.strokeStyle = color;
  ctx.beginPath();
  points.forEach((p, i) => {
    if (i === 0) {
      ctx.moveTo(x(i), y(Math.min(p.value, 1)));
    } else {
      ctx.lineTo(x(i), y(Math.min(p.value, 1)));
    }
  });
  ctx.stroke();
}

function render(state: ConsoleState): void {
  el("phase").textContent = state.phase;
  el("error").textContent = state.errorMessage;
  const banner = el("alarm-banner");
  banner.style.display = state.alarmActive ? "block" : "none";

  const mirror = state.configMirror;
  el("config").textContent = mirror
    ? `v${mirror.version}  td=${mirror.td}  tp=${mirror.tp}  duration=${mirror.duration_required}`
    : "no config yet";

  const tbody = el<HTMLTableSectionElement>("feed");
  tbody.innerHTML = "";
  for (const row of renderFeed(state.events).slice(-50).reverse()) {
    const tr = document.createElement("tr");
    tr.className = `row-${row.color}`;
    for (const cell of [
      row.timestamp,
      row.kind,
      String(row.windowId),
      row.likelihood,
      row.score,
      `v${row.configVersion}`,
    ]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }

  if (mirror) {
    drawChart(
      el<HTMLCanvasElement>("chart-likelihood"),
      likelihoodSeries(state.events, mirror),
      "#d33",
    );
    drawChart(
      el<HTMLCanvasElement>("chart-score"),
      scoreSeries(state.events, mirror),
      "#d90",
    );
  }

  const staged = el("staged");
  staged.textContent = state.pendingEdits
    .map((p: PendingEdit) => `${p.field}=${p.value}${p.stale ? " (stale)" : ""}`)
    .join("  ");
}

export function boot(): void {
  const base = (el<HTMLInputElement>("base-url").value =
    window.location.origin === "null" || window.location.protocol === "file:"
      ? "http://127.0.0.1:8000"
      : window.location.origin);
  let console_ = new Console(new ConsoleClient(base));
  console_.onChange(render);

  el<HTMLButtonElement>("connect").onclick = () => {
    const sessionId = el<HTMLInputElement>("session-id").value.trim();
    const url = el<HTMLInputElement>("base-url").value.trim() || base;
    console_.disconnect();
    console_ = new Console(new ConsoleClient(url));
    console_.onChange(render);
    console_.connect(sessionId);
  };

  for (const field of TUNABLE_FIELDS) {
    const slider = el<HTMLInputElement>(`slider-${field}`);
    const range = SLIDER_RANGES[field];
    slider.min = String(range.min);
    slider.max = String(range.max);
    slider.step = String(range.step);
    slider.oninput = () => {
      el(`value-${field}`).textContent = slider.value;
      console_.stage(field, Number(slider.value));
    };
  }
  el<HTMLButtonElement>("apply").onclick = async () => {
    const version = await console_.apply();
    if (version !== null) {
      el("ack").textContent = `engine ack: v${version}`;
    }
  };
  el<HTMLButtonElement>("discard").onclick = () => console_.discard();
}

boot();
