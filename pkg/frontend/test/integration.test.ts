/**
 * Console loop against the real engine (acceptance criterion 10): a slider
 * change td -> 0.30 must produce an engine ack with an incremented version,
 * and the WARN/ALARM rows the console displays must match the engine's
 * event-log golden file exactly.
 *
 * Requires python3 with the preictal package importable (installed with
 * `pip install -e ..`).
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ConsoleClient } from "../src/client.js";
import { Console } from "../src/console.js";
import { renderFeed } from "../src/feed.js";
import { EventRecord } from "../src/types.js";

const PORT = 8765 + Math.floor(Math.random() * 400);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let workDir = "";
let dataDir = "";

function wsFactory(url: string) {
  return new WebSocket(url) as unknown as import("../src/client.js").WebSocketLike;
}

function py(args: string[], cwd: string): void {
  const out = spawnSync("python3", args, { cwd, encoding: "utf-8" });
  if (out.status !== 0) {
    throw new Error(`python3 ${args.join(" ")} failed:\n${out.stderr}`);
  }
}

async function waitForServer(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/sessions/probe`);
      if (resp.status === 404) {
        return;
      }
    } catch {
      // not listening yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("engine service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-it-"));
  dataDir = join(workDir, "sessions");

  py(["-m", "preictal.cli", "synth", join(workDir, "train.csv"),
      "--duration-s", "600", "--seed", "101",
      "--seizure", "100", "--seizure", "220", "--seizure", "340",
      "--seizure", "460"], workDir);
  py(["-m", "preictal.cli", "synth", join(workDir, "rec.csv"),
      "--duration-s", "300", "--seed", "7", "--seizure", "150"], workDir);
  py(["-m", "preictal.cli", "train", join(workDir, "train.csv"),
      "--out", join(workDir, "pop.ais1"), "--seed", "42"], workDir);

  server = spawn("python3", ["-c", [
    "import uvicorn",
    "from preictal.service import create_app",
    `uvicorn.run(create_app(${JSON.stringify(dataDir)}), host='127.0.0.1', port=${PORT}, log_level='warning')`,
  ].join("\n")], { cwd: workDir, stdio: ["ignore", "inherit", "inherit"] });
  await waitForServer();
}, 60000);

afterAll(() => {
  server?.kill();
});

describe("console against the live engine", () => {
  it("tunes td to 0.30 and mirrors the event log exactly", async () => {
    const resp = await fetch(`${BASE}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        recording_path: join(workDir, "rec.csv"),
        bundle_path: join(workDir, "pop.ais1"),
        speed: 100.0,
      }),
    });
    expect(resp.ok).toBe(true);
    const { session_id } = (await resp.json()) as { session_id: string };

    const client = new ConsoleClient(BASE, wsFactory);
    const console_ = new Console(client);
    const ended = new Promise<void>((resolve) => {
      console_.onChange((s) => {
        if (s.phase === "ended") {
          resolve();
        }
      });
    });
    console_.connect(session_id);

    // wait until live, then move the td slider and apply
    await new Promise((r) => setTimeout(r, 400));
    expect(console_.state.phase).toBe("live");
    const versionBefore = console_.state.configMirror!.version;
    console_.stage("td", 0.3);
    expect(console_.state.configMirror!.td).toBe(0.23); // staged, not applied
    const acked = await console_.apply();
    expect(acked).toBe(versionBefore + 1);
    expect(console_.state.configMirror!.td).toBe(0.3);
    expect(console_.state.configMirror!.version).toBe(versionBefore + 1);

    await ended;

    // golden comparison: displayed WARN/ALARM rows vs the engine's log file
    const logPath = join(dataDir, `${session_id}.events.jsonl`);
    const golden = readFileSync(logPath, "utf-8")
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as EventRecord);
    const goldenRows = renderFeed(
      golden.filter((e) => e.kind === "WARN" || e.kind === "ALARM"),
    );
    const displayedRows = renderFeed(
      console_.state.events.filter(
        (e) => e.kind === "WARN" || e.kind === "ALARM",
      ),
    );
    expect(displayedRows.length).toBeGreaterThan(0);
    expect(displayedRows).toEqual(goldenRows);

    // every event after the ack boundary ran under the new revision
    const boundary = golden.filter((e) => e.config_version === versionBefore);
    const after = golden.filter((e) => e.config_version === versionBefore + 1);
    expect(boundary.length + after.length).toBe(golden.length);

    console_.disconnect();
  }, 60000);

  it("reports an error state for an unknown session", async () => {
    const client = new ConsoleClient(BASE, wsFactory);
    const console_ = new Console(client);
    const errored = new Promise<string>((resolve) => {
      console_.onChange((s) => {
        if (s.phase === "error") {
          resolve(s.errorMessage);
        }
      });
    });
    console_.connect("does-not-exist");
    expect(await errored).toContain("unknown session");
    console_.disconnect();
  }, 15000);

  it("rejects an invalid tune and keeps the mirror", async () => {
    const resp = await fetch(`${BASE}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        recording_path: join(workDir, "rec.csv"),
        speed: 0.0,
      }),
    });
    const { session_id } = (await resp.json()) as { session_id: string };
    const client = new ConsoleClient(BASE, wsFactory);
    const console_ = new Console(client);
    console_.connect(session_id);
    await new Promise((r) => setTimeout(r, 300));
    console_.stage("tp", 1.5);
    const acked = await console_.apply();
    expect(acked).toBeNull();
    expect(console_.state.errorMessage).toContain("tp");
    expect(console_.state.configMirror!.tp).toBe(0.09);
    console_.disconnect();
  }, 30000);
});
