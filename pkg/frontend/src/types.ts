/** Wire types of the engine's HTTP + WebSocket contract. */

export interface EngineConfig {
  td: number;
  tp: number;
  duration_required: number;
  gamma_s: number;
  band_low_hz: number;
  band_high_hz: number;
  gain: number;
  w: number;
  delta_shift: number;
  artifact_threshold: number;
  ar_order: number;
  dwt_levels: number;
  version: number;
}

/** One event-log record; field set and order are frozen engine-side. */
export interface EventRecord {
  ts: number;
  window_id: number;
  kind: "WARN" | "ALARM" | "CLEAR";
  likelihood: number;
  score: number;
  signature_hex: string;
  config_version: number;
}

export interface HelloRecord {
  session_id: string;
  config: EngineConfig;
  next_seq: number;
}

export interface EndRecord {
  end_of_session: true;
  next_seq: number;
}

export interface ConfigAck {
  applied_version: number;
  effective_after_window: number;
}

export type StreamRecord =
  | { type: "hello"; hello: HelloRecord }
  | { type: "event"; event: EventRecord }
  | { type: "end"; end: EndRecord }
  | { type: "error"; message: string };

export function parseStreamRecord(raw: string): StreamRecord {
  const data = JSON.parse(raw);
  if (data.end_of_session) {
    return { type: "end", end: data as EndRecord };
  }
  if (typeof data.error === "string") {
    return { type: "error", message: data.error };
  }
  if (typeof data.session_id === "string" && data.config) {
    return { type: "hello", hello: data as HelloRecord };
  }
  if (typeof data.kind === "string" && typeof data.window_id === "number") {
    return { type: "event", event: data as EventRecord };
  }
  return { type: "error", message: `unrecognized record: ${raw}` };
}

/** The three clinician-exposed tuning fields. */
export type TunableField = "td" | "tp" | "duration_required";

export const TUNABLE_FIELDS: TunableField[] = ["td", "tp", "duration_required"];
