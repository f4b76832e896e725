import type { HelloAck, StateFrame } from "../src/protocol.js";

export function ackFixture(overrides: Partial<HelloAck> = {}): HelloAck {
  return {
    type: "hello_ack", version: 1, session_id: "s1", mode: "human-in-control",
    Ts: 0.1, duration: 30, n_steps: 300, time_scale: 1,
    lane: { centers: [0, -1.8], width: 3.7, true_center: 0, d_near: 5, d_far: 50 },
    limits: { delta_max: 0.5, a_max: 3 },
    ...overrides,
  };
}

export function frameFixture(overrides: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state", version: 1, step: 0, t: 0, mode: "human-in-control",
    pose: { x: 0, y: 0, theta: 0, v: 15 },
    lane: { centers: [0, -1.8], width: 3.7, true_center: 0 },
    applied: { delta: 0, a: 0 }, suggested: null, weights: null,
    stale: false, done: false,
    ...overrides,
  };
}
