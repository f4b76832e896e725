// Wire types for the session protocol (docs/wire-protocol.md, version 1).
// Everything on the socket is JSON text frames; this module is the only
// place that reads or writes the raw shapes.

export const PROTOCOL_VERSION = 1;

export interface HelloOptions {
  client?: string;
  steeringRange?: [number, number];
  accelRange?: [number, number];
  invertSteering?: boolean;
  scenario?: string;
}

export interface Hello {
  type: "hello";
  version: number;
  client: string;
  steering_range: [number, number];
  accel_range: [number, number];
  invert_steering: boolean;
  scenario?: string;
}

export interface LaneInfo {
  centers: number[];
  width: number;
  true_center: number;
  d_near?: number;
  d_far?: number;
}

export interface HelloAck {
  type: "hello_ack";
  version: number;
  session_id: string;
  mode: string;
  Ts: number;
  duration: number;
  n_steps: number;
  time_scale: number;
  lane: LaneInfo;
  limits: { delta_max: number; a_max: number };
}

export interface Pose {
  x: number;
  y: number;
  theta: number;
  v: number;
}

export interface StateFrame {
  type: "state";
  version: number;
  step: number;
  t: number;
  mode: string;
  pose: Pose;
  lane: LaneInfo;
  applied: { delta: number; a: number };
  suggested: { delta: number; a: number } | null;
  weights: number[] | null;
  stale: boolean;
  done: boolean;
}

export interface EndFrame {
  type: "end";
  version: number;
  session_id: string;
  mode: string;
  n_steps: number;
  partial: boolean;
  trajectory_id: string;
}

export interface ErrorFrame {
  type: "error";
  version: number;
  code: string;
  message: string;
}

export type ServerMessage = HelloAck | StateFrame | EndFrame | ErrorFrame;

export class ProtocolError extends Error {}

export function makeHello(opts: HelloOptions = {}): Hello {
  const hello: Hello = {
    type: "hello",
    version: PROTOCOL_VERSION,
    client: opts.client ?? "steering-ui 0.1",
    steering_range: opts.steeringRange ?? [-1, 1],
    accel_range: opts.accelRange ?? [-1, 1],
    invert_steering: opts.invertSteering ?? false,
  };
  if (opts.scenario !== undefined) hello.scenario = opts.scenario;
  return hello;
}

// t is a client-side timestamp (ms); the server ignores it, we keep it
// so the sent stream is checkable for monotonicity.
export function makeInput(steering: number, accel: number, t: number): string {
  return JSON.stringify({ type: "input", steering, accel, t });
}

export function encode(msg: object): string {
  return JSON.stringify(msg);
}

const SERVER_TYPES = new Set(["hello_ack", "state", "end", "error"]);

export function parseServerMessage(raw: string): ServerMessage {
  let msg: any;
  try {
    msg = JSON.parse(raw);
  } catch {
    throw new ProtocolError("server frame is not JSON");
  }
  if (typeof msg !== "object" || msg === null || typeof msg.type !== "string") {
    throw new ProtocolError("server frame has no type");
  }
  if (!SERVER_TYPES.has(msg.type)) {
    throw new ProtocolError(`unknown server frame type '${msg.type}'`);
  }
  if (msg.version !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version ${msg.version}`);
  }
  if (msg.type === "state") {
    if (typeof msg.step !== "number" || typeof msg.pose !== "object") {
      throw new ProtocolError("malformed state frame");
    }
  }
  if (msg.type === "hello_ack") {
    if (typeof msg.Ts !== "number" || typeof msg.time_scale !== "number") {
      throw new ProtocolError("malformed hello_ack");
    }
  }
  return msg as ServerMessage;
}
