import { describe, expect, it } from "vitest";
import {
  makeHello, makeInput, parseServerMessage, ProtocolError, PROTOCOL_VERSION,
} from "../src/protocol.js";

describe("hello", () => {
  it("defaults match the documented handshake", () => {
    const hello = makeHello();
    expect(hello.type).toBe("hello");
    expect(hello.version).toBe(PROTOCOL_VERSION);
    expect(hello.steering_range).toEqual([-1, 1]);
    expect(hello.accel_range).toEqual([-1, 1]);
    expect(hello.invert_steering).toBe(false);
    expect("scenario" in hello).toBe(false);
  });

  it("carries declared ranges and scenario", () => {
    const hello = makeHello({
      steeringRange: [0, 100], accelRange: [-5, 5], scenario: "default",
    });
    expect(hello.steering_range).toEqual([0, 100]);
    expect(hello.accel_range).toEqual([-5, 5]);
    expect(hello.scenario).toBe("default");
  });
});

describe("input encoding", () => {
  it("is a flat json object with the client timestamp", () => {
    const msg = JSON.parse(makeInput(37.5, 0, 123.4));
    expect(msg).toEqual({ type: "input", steering: 37.5, accel: 0, t: 123.4 });
  });
});

describe("parseServerMessage", () => {
  const ack = {
    type: "hello_ack", version: 1, session_id: "abc", mode: "human-in-control",
    Ts: 0.1, duration: 30, n_steps: 300, time_scale: 1,
    lane: { centers: [0, -1.8], width: 3.7, true_center: 0 },
    limits: { delta_max: 0.5, a_max: 3 },
  };

  it("accepts each documented frame type", () => {
    expect(parseServerMessage(JSON.stringify(ack)).type).toBe("hello_ack");
    const state = parseServerMessage(JSON.stringify({
      type: "state", version: 1, step: 0, t: 0, mode: "human-in-control",
      pose: { x: 0, y: 0, theta: 0, v: 15 },
      lane: { centers: [0, -1.8], width: 3.7, true_center: 0 },
      applied: { delta: 0, a: 0 }, suggested: null, weights: null,
      stale: false, done: false,
    }));
    expect(state.type).toBe("state");
    const end = parseServerMessage(JSON.stringify({
      type: "end", version: 1, session_id: "abc", mode: "human-in-control",
      n_steps: 300, partial: false, trajectory_id: "deadbeef-7",
    }));
    expect(end.type).toBe("end");
    const err = parseServerMessage(JSON.stringify({
      type: "error", version: 1, code: "bad-scenario", message: "nope",
    }));
    expect(err.type).toBe("error");
  });

  it("rejects junk", () => {
    expect(() => parseServerMessage("not json")).toThrow(ProtocolError);
    expect(() => parseServerMessage("42")).toThrow(ProtocolError);
    expect(() => parseServerMessage("{}")).toThrow(ProtocolError);
    expect(() => parseServerMessage(JSON.stringify({ type: "launch" }))).toThrow(ProtocolError);
  });

  it("rejects a version it does not speak", () => {
    expect(() => parseServerMessage(JSON.stringify({ ...ack, version: 2 })))
      .toThrow(/version/);
  });

  it("rejects malformed state and ack frames", () => {
    expect(() => parseServerMessage(JSON.stringify({ type: "state", version: 1 })))
      .toThrow(ProtocolError);
    expect(() => parseServerMessage(JSON.stringify({ type: "hello_ack", version: 1 })))
      .toThrow(ProtocolError);
  });
});
