import { describe, expect, it } from "vitest";

import { likelihoodSeries, renderFeed, renderRow, scoreSeries } from "../src/feed.js";
import { EngineConfig, EventRecord, parseStreamRecord } from "../src/types.js";

const config = { td: 0.23, tp: 0.09 } as EngineConfig;

function ev(kind: EventRecord["kind"], windowId: number): EventRecord {
  return {
    ts: windowId * 4,
    window_id: windowId,
    kind,
    likelihood: 0.123456,
    score: 0.987654,
    signature_hex: "ab".repeat(21),
    config_version: 2,
  };
}

describe("row rendering", () => {
  it("WARN rows are amber, ALARM rows red", () => {
    expect(renderRow(ev("WARN", 34)).color).toBe("amber");
    expect(renderRow(ev("ALARM", 37)).color).toBe("red");
    expect(renderRow(ev("CLEAR", 45)).color).toBe("gray");
  });

  it("row values come verbatim from the record", () => {
    const row = renderRow(ev("ALARM", 37));
    expect(row.timestamp).toBe("00:02:28.0");
    expect(row.likelihood).toBe("0.1235");
    expect(row.score).toBe("0.9877");
    expect(row.windowId).toBe(37);
    expect(row.configVersion).toBe(2);
    expect(row.text).toContain("ALARM");
  });

  it("feed preserves event order", () => {
    const rows = renderFeed([ev("WARN", 1), ev("ALARM", 2)]);
    expect(rows.map((r) => r.kind)).toEqual(["WARN", "ALARM"]);
  });
});

describe("chart series", () => {
  it("likelihood series carries the td line", () => {
    const pts = likelihoodSeries([ev("WARN", 1)], config);
    expect(pts).toEqual([{ ts: 4, value: 0.123456, threshold: 0.23 }]);
  });

  it("score series carries the tp line", () => {
    const pts = scoreSeries([ev("WARN", 1)], config);
    expect(pts).toEqual([{ ts: 4, value: 0.987654, threshold: 0.09 }]);
  });

  it("series are windowed to the most recent entries", () => {
    const events = Array.from({ length: 250 }, (_, i) => ev("WARN", i));
    expect(likelihoodSeries(events, config).length).toBe(100);
  });
});

describe("stream record parsing", () => {
  it("classifies hello, event, end and error frames", () => {
    expect(
      parseStreamRecord(
        JSON.stringify({ session_id: "x", config, next_seq: 0 }),
      ).type,
    ).toBe("hello");
    expect(parseStreamRecord(JSON.stringify(ev("WARN", 1))).type).toBe("event");
    expect(
      parseStreamRecord(JSON.stringify({ end_of_session: true, next_seq: 3 }))
        .type,
    ).toBe("end");
    expect(
      parseStreamRecord(JSON.stringify({ error: "unknown session" })).type,
    ).toBe("error");
  });
});
