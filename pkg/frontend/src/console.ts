/**
 * Console controller: one connected session, a live feed, staged tuning.
 *
 * Wraps the pure state reducer around the client so a UI (or a test) only
 * observes state snapshots and submits intents.
 */

import { ConsoleClient, EventStream, TuneError } from "./client.js";
import {
  ConsoleState,
  discardEdits,
  editsAsBody,
  initialState,
  onAck,
  onConnecting,
  onEnd,
  onEvent,
  onHello,
  onReconnecting,
  onStreamError,
  onTuneRejected,
  stageEdit,
} from "./state.js";
import { StreamRecord, TunableField } from "./types.js";

export class Console {
  state: ConsoleState;
  private stream: EventStream | null = null;
  private listeners: Array<(s: ConsoleState) => void> = [];

  constructor(private client: ConsoleClient) {
    this.state = initialState();
  }

  onChange(listener: (s: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  private setState(next: ConsoleState): void {
    this.state = next;
    for (const listener of this.listeners) {
      listener(next);
    }
  }

  connect(sessionId: string): void {
    this.disconnect();
    this.setState(onConnecting(this.state, sessionId));
    this.stream = this.client.connect(sessionId, {
      onRecord: (record: StreamRecord) => {
        switch (record.type) {
          case "hello":
            this.setState(onHello(this.state, record.hello));
            break;
          case "event":
            this.setState(onEvent(this.state, record.event));
            break;
          case "end":
            this.setState(onEnd(this.state));
            break;
          case "error":
            this.setState(onStreamError(this.state, record.message));
            break;
        }
      },
      onReconnect: () => this.setState(onReconnecting(this.state)),
    });
  }

  disconnect(): void {
    this.stream?.close();
    this.stream = null;
  }

  stage(field: TunableField, value: number): void {
    this.setState(stageEdit(this.state, field, value));
  }

  discard(): void {
    this.setState(discardEdits(this.state));
  }

  /** Submit staged edits; returns the ack'd version or null on rejection. */
  async apply(): Promise<number | null> {
    const sessionId = this.state.sessionId;
    if (!sessionId) {
      throw new Error("not connected");
    }
    const body = editsAsBody(this.state);
    if (Object.keys(body).length === 0) {
      return null;
    }
    try {
      const ack = await this.client.tune(sessionId, body);
      this.setState(onAck(this.state, ack));
      return ack.applied_version;
    } catch (err) {
      if (err instanceof TuneError) {
        this.setState(onTuneRejected(this.state, err.message));
        return null;
      }
      throw err;
    }
  }
}
