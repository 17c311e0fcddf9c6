/**
 * Console state: a pure reducer over stream records and user edits.
 *
 * The console never computes decisions. Every displayed number comes out of
 * an engine event record; the config mirror only moves on hello records and
 * acknowledged (or externally observed) engine versions, so its version can
 * never run ahead of the engine. Pending slider edits stay staged until an
 * ack applies them or an external change marks them stale.
 */

import {
  ConfigAck,
  EngineConfig,
  EventRecord,
  HelloRecord,
  TunableField,
} from "./types.js";

export type ConnectionPhase =
  | "idle"
  | "connecting"
  | "live"
  | "reconnecting"
  | "ended"
  | "error";

export interface PendingEdit {
  field: TunableField;
  value: number;
  stale: boolean;
}

export interface ConsoleState {
  sessionId: string | null;
  phase: ConnectionPhase;
  errorMessage: string;
  configMirror: EngineConfig | null;
  pendingEdits: PendingEdit[];
  events: EventRecord[];
  nextSeq: number;
  alarmActive: boolean;
  lastAckVersion: number | null;
  maxEvents: number;
}

export function initialState(maxEvents = 500): ConsoleState {
  return {
    sessionId: null,
    phase: "idle",
    errorMessage: "",
    configMirror: null,
    pendingEdits: [],
    events: [],
    nextSeq: 0,
    alarmActive: false,
    lastAckVersion: null,
    maxEvents,
  };
}

export function onConnecting(state: ConsoleState, sessionId: string): ConsoleState {
  return { ...state, sessionId, phase: "connecting", errorMessage: "" };
}

export function onHello(state: ConsoleState, hello: HelloRecord): ConsoleState {
  const mirror = state.configMirror;
  // engine version is authoritative; never let the mirror run ahead of it
  const next =
    mirror === null || hello.config.version >= mirror.version
      ? hello.config
      : mirror;
  return {
    ...state,
    sessionId: hello.session_id,
    phase: "live",
    configMirror: next,
    errorMessage: "",
  };
}

export function onEvent(state: ConsoleState, event: EventRecord): ConsoleState {
  // exactly-once: resumed streams start at nextSeq, and a duplicate
  // (window_id, kind) pair can never legally repeat in the log
  const dup = state.events.some(
    (e) => e.window_id === event.window_id && e.kind === event.kind,
  );
  if (dup) {
    return state;
  }
  const events = [...state.events, event].slice(-state.maxEvents);
  let alarmActive = state.alarmActive;
  if (event.kind === "ALARM") {
    alarmActive = true;
  } else if (event.kind === "CLEAR") {
    alarmActive = false;
  }
  let configMirror = state.configMirror;
  if (configMirror && event.config_version > configMirror.version) {
    // engine moved on without us (external tuning); mirror only the version,
    // values arrive with the next hello, and flag staged edits as stale
    configMirror = { ...configMirror, version: event.config_version };
    return {
      ...state,
      events,
      alarmActive,
      nextSeq: state.nextSeq + 1,
      configMirror,
      pendingEdits: state.pendingEdits.map((p) => ({ ...p, stale: true })),
    };
  }
  return { ...state, events, alarmActive, nextSeq: state.nextSeq + 1 };
}

export function onEnd(state: ConsoleState): ConsoleState {
  return { ...state, phase: "ended" };
}

export function onStreamError(state: ConsoleState, message: string): ConsoleState {
  return { ...state, phase: "error", errorMessage: message };
}

export function onReconnecting(state: ConsoleState): ConsoleState {
  return { ...state, phase: "reconnecting" };
}

export function stageEdit(
  state: ConsoleState,
  field: TunableField,
  value: number,
): ConsoleState {
  const pendingEdits = state.pendingEdits
    .filter((p) => p.field !== field)
    .concat([{ field, value, stale: false }]);
  return { ...state, pendingEdits };
}

export function discardEdits(state: ConsoleState): ConsoleState {
  return { ...state, pendingEdits: [] };
}

/** Successful PUT: the engine confirmed a new revision with our edits. */
export function onAck(state: ConsoleState, ack: ConfigAck): ConsoleState {
  let configMirror = state.configMirror;
  if (configMirror) {
    const applied: Partial<EngineConfig> = {};
    for (const p of state.pendingEdits) {
      if (!p.stale) {
        applied[p.field] = p.value;
      }
    }
    configMirror = {
      ...configMirror,
      ...applied,
      version: ack.applied_version,
    };
  }
  return {
    ...state,
    configMirror,
    pendingEdits: [],
    lastAckVersion: ack.applied_version,
  };
}

/** Rejected PUT: inline error, mirror untouched, edits kept for correction. */
export function onTuneRejected(state: ConsoleState, message: string): ConsoleState {
  return { ...state, errorMessage: message };
}

export function editsAsBody(state: ConsoleState): Record<string, number> {
  const body: Record<string, number> = {};
  for (const p of state.pendingEdits) {
    if (!p.stale) {
      body[p.field] = p.value;
    }
  }
  return body;
}
