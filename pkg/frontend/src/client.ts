/**
 * Engine client: HTTP for status/tuning/export plus the event WebSocket
 * with resume-on-reconnect.
 *
 * Reconnects request `?from_seq=<delivered count>`, so a dropped connection
 * resumes exactly where the feed stopped and never repeats a row. The
 * WebSocket constructor is injectable for non-browser runtimes.
 */

import { ConfigAck, parseStreamRecord, StreamRecord } from "./types.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamHandlers {
  onRecord: (record: StreamRecord) => void;
  onReconnect?: (fromSeq: number) => void;
}

export interface EventStream {
  close(): void;
}

export class TuneError extends Error {}

export class ConsoleClient {
  constructor(
    private baseUrl: string,
    private wsFactory?: WebSocketFactory,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private wsUrl(sessionId: string, fromSeq: number): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${sessionId}/events?from_seq=${fromSeq}`;
  }

  async status(sessionId: string): Promise<Record<string, unknown>> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}`);
    if (!resp.ok) {
      throw new Error(`status ${resp.status}: ${await resp.text()}`);
    }
    return (await resp.json()) as Record<string, unknown>;
  }

  /** Submit staged edits; resolves with the engine ack or throws TuneError. */
  async tune(
    sessionId: string,
    edits: Record<string, number>,
  ): Promise<ConfigAck> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/config`,
      {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(edits),
      },
    );
    const body = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      throw new TuneError(String(body.detail ?? `status ${resp.status}`));
    }
    return body as unknown as ConfigAck;
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export`;
  }

  /**
   * Open the event stream; delivered records advance the resume cursor and
   * unexpected drops reconnect from it after a short backoff.
   */
  connect(sessionId: string, handlers: StreamHandlers, fromSeq = 0): EventStream {
    const factory: WebSocketFactory =
      this.wsFactory ??
      ((url: string) => new WebSocket(url) as unknown as WebSocketLike);
    let cursor = fromSeq;
    let closed = false;
    let ended = false;
    let ws: WebSocketLike | null = null;
    let timer: ReturnType<typeof setTimeout> | null = null;

    const open = () => {
      ws = factory(this.wsUrl(sessionId, cursor));
      ws.onmessage = (ev) => {
        const record = parseStreamRecord(String(ev.data));
        if (record.type === "event") {
          cursor += 1;
        }
        if (record.type === "end" || record.type === "error") {
          ended = true;
        }
        handlers.onRecord(record);
      };
      ws.onclose = () => {
        if (closed || ended) {
          return;
        }
        handlers.onReconnect?.(cursor);
        timer = setTimeout(open, 250);
      };
      ws.onerror = () => {
        // onclose fires after onerror; reconnect handled there
      };
    };
    open();

    return {
      close() {
        closed = true;
        if (timer !== null) {
          clearTimeout(timer);
        }
        ws?.close();
      },
    };
  }
}
