/**
 * Feed rendering: event records to display rows and rolling chart series.
 *
 * Rows carry engine-emitted values verbatim (fixed decimal formatting only),
 * so every displayed number is traceable to its event-log record.
 */

import { EngineConfig, EventRecord } from "./types.js";

export const KIND_COLORS: Record<EventRecord["kind"], string> = {
  WARN: "amber",
  ALARM: "red",
  CLEAR: "gray",
};

export interface FeedRow {
  color: string;
  kind: string;
  timestamp: string;
  likelihood: string;
  score: string;
  windowId: number;
  configVersion: number;
  text: string;
}

function fmtClock(ts: number): string {
  const h = Math.floor(ts / 3600);
  const m = Math.floor((ts % 3600) / 60);
  const s = ts % 60;
  const pad = (v: number) => String(v).padStart(2, "0");
  const secs = s.toFixed(1).padStart(4, "0");
  return `${pad(h)}:${pad(m)}:${secs}`;
}

export function renderRow(event: EventRecord): FeedRow {
  const timestamp = fmtClock(event.ts);
  const likelihood = event.likelihood.toFixed(4);
  const score = event.score.toFixed(4);
  return {
    color: KIND_COLORS[event.kind],
    kind: event.kind,
    timestamp,
    likelihood,
    score,
    windowId: event.window_id,
    configVersion: event.config_version,
    text: `${timestamp} ${event.kind.padEnd(5)} w=${event.window_id} L=${likelihood} s=${score} v${event.config_version}`,
  };
}

export function renderFeed(events: EventRecord[]): FeedRow[] {
  return events.map(renderRow);
}

export interface ChartPoint {
  ts: number;
  value: number;
  threshold: number;
}

/** Detector likelihood per event against the td line. */
export function likelihoodSeries(
  events: EventRecord[],
  config: EngineConfig,
  window = 100,
): ChartPoint[] {
  return events
    .slice(-window)
    .map((e) => ({ ts: e.ts, value: e.likelihood, threshold: config.td }));
}

/** Prediction score per event against the tp line. */
export function scoreSeries(
  events: EventRecord[],
  config: EngineConfig,
  window = 100,
): ChartPoint[] {
  return events
    .slice(-window)
    .map((e) => ({ ts: e.ts, value: e.score, threshold: config.tp }));
}
