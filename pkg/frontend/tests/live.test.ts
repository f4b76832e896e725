import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readdirSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";
import { SessionClient, type Transport } from "../src/client.js";
import { SessionStore } from "../src/state.js";

// End-to-end check against the real session service: spawn `drivelab serve`,
// run one scripted session through the production client, and inspect the
// record it leaves behind. Requires the python package to be installed.

const CONFIG = `mode: human-in-control
duration: 10.0
driver:
  kind: live-session
session:
  time_scale: 200.0
`;

function wsTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.once("error", reject);
    ws.once("open", () => {
      resolve({
        send: (data) => {
          if (ws.readyState !== WebSocket.OPEN) throw new Error("socket not open");
          ws.send(data);
        },
        close: () => ws.close(),
        onOpen: (cb) => cb(), // already open by the time the client attaches
        onMessage: (cb) => ws.on("message", (data) => cb(data.toString())),
        onClose: (cb) => ws.on("close", () => cb()),
      });
    });
  });
}

async function connectWithRetry(url: string, attempts = 80): Promise<Transport> {
  for (let i = 0; i < attempts; i++) {
    try {
      return await wsTransport(url);
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  throw new Error(`server at ${url} never came up`);
}

describe("live session against drivelab serve", () => {
  const port = 8000 + Math.floor(Math.random() * 20000);
  const dir = mkdtempSync(join(tmpdir(), "steering-ui-"));
  let server: ChildProcess;

  beforeAll(() => {
    writeFileSync(join(dir, "scenario.yaml"), CONFIG);
    server = spawn("drivelab", [
      "serve", "--port", String(port),
      "--config", join(dir, "scenario.yaml"),
      "--out-dir", dir,
    ], { stdio: "ignore" });
  });

  afterAll(() => {
    server.kill();
  });

  it("handshakes, streams 100 frames, and leaves a complete record", async () => {
    const transport = await connectWithRetry(`ws://127.0.0.1:${port}`);
    const store = new SessionStore();
    const client = new SessionClient(transport, store, {
      steeringRange: [-1, 1], client: "steering-ui test",
    });

    // wait for the ack, then feed a gentle steady input until the end frame
    const started = Date.now();
    let t = 0;
    while (store.phase !== "ended" && store.phase !== "closed" && store.phase !== "error") {
      if (Date.now() - started > 20000) throw new Error(`stuck in phase ${store.phase}`);
      client.sendInput(0.05, 0, ++t);
      await new Promise((r) => setTimeout(r, 5));
    }

    expect(store.phase).toBe("ended");
    expect(store.ack).not.toBeNull();
    expect(store.ack!.n_steps).toBe(100);
    expect(store.ack!.mode).toBe("human-in-control");
    expect(store.ack!.limits.delta_max).toBeGreaterThan(0);
    const last = store.view(Date.now()).frame!;
    expect(last.step).toBe(99); // every frame passed through the store
    expect(last.done).toBe(true);
    expect(store.end!.partial).toBe(false);
    expect(store.end!.n_steps).toBe(100);
    expect(store.partial).toBe(false);

    client.close();

    // the server wrote the record next to the scenario
    await new Promise((r) => setTimeout(r, 300));
    const recs = readdirSync(dir).filter((f) => f.endsWith(".rec"));
    expect(recs).toHaveLength(1);
    expect(recs[0]).toBe(`${store.end!.trajectory_id}.rec`);
    const header = JSON.parse(readFileSync(join(dir, recs[0]), "utf8").split("\n")[0]);
    expect(header.n_steps).toBe(100);
    expect(header.partial).toBe(false);
    expect(header.mode).toBe("human-in-control");
  });
});
