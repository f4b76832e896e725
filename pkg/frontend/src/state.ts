import type { EndFrame, ErrorFrame, HelloAck, Pose, StateFrame } from "./protocol.js";

// The session store holds everything the renderer may look at: the latest
// state frame, the previous one (interpolation buffer), and the session
// phase. Interpolation is display-only; nothing computed here is ever sent
// back to the server.

export type Phase =
  | "connecting"
  | "waiting"   // hello sent or acked, no state frame yet
  | "running"
  | "done"      // final state frame seen
  | "ended"     // end frame received
  | "closed"    // socket gone without an end frame
  | "error";

export const STALE_AFTER_MS = 1000;

export interface ClientView {
  phase: Phase;
  ack: HelloAck | null;
  frame: StateFrame | null;
  pose: Pose | null;      // interpolated, what the renderer should draw
  alpha: number;          // 0 at prev frame, 1 at latest
  staleMs: number;        // wall time since the last frame arrived
  stalled: boolean;       // no frames for > STALE_AFTER_MS
  partial: boolean;
  error: ErrorFrame | null;
  inputWarning: string | null;
}

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

function lerpPose(a: Pose, b: Pose, t: number): Pose {
  return {
    x: lerp(a.x, b.x, t),
    y: lerp(a.y, b.y, t),
    theta: lerp(a.theta, b.theta, t),
    v: lerp(a.v, b.v, t),
  };
}

export class SessionStore {
  phase: Phase = "connecting";
  ack: HelloAck | null = null;
  error: ErrorFrame | null = null;
  end: EndFrame | null = null;
  partial = false;

  private latest: StateFrame | null = null;
  private prev: StateFrame | null = null;
  private latestAt = 0;

  helloSent() {
    if (this.phase === "connecting") this.phase = "waiting";
  }

  acceptAck(ack: HelloAck) {
    this.ack = ack;
    if (this.phase === "connecting") this.phase = "waiting";
  }

  acceptFrame(frame: StateFrame, nowMs: number) {
    // no time travel: a reordered older frame is dropped
    if (this.latest !== null && frame.step < this.latest.step) return;
    this.prev = this.latest;
    this.latest = frame;
    this.latestAt = nowMs;
    if (this.phase === "waiting" || this.phase === "connecting") {
      this.phase = "running";
    }
    if (frame.done && this.phase === "running") this.phase = "done";
  }

  acceptEnd(end: EndFrame) {
    this.end = end;
    this.partial = end.partial;
    this.phase = "ended";
  }

  acceptError(err: ErrorFrame) {
    this.error = err;
    // handshake errors are fatal, later ones advisory
    if (this.latest === null) this.phase = "error";
  }

  connectionClosed() {
    if (this.phase === "ended" || this.phase === "error") return;
    if (this.phase !== "done") this.partial = true;
    this.phase = "closed";
  }

  get active(): boolean {
    return this.phase === "waiting" || this.phase === "running";
  }

  /** Frame interval in wall-clock ms, from the ack timing. */
  frameIntervalMs(): number {
    if (!this.ack) return 100;
    return (this.ack.Ts / this.ack.time_scale) * 1000;
  }

  view(nowMs: number, inputWarning: string | null = null): ClientView {
    const staleMs = this.latest ? nowMs - this.latestAt : 0;
    let pose: Pose | null = null;
    let alpha = 1;
    if (this.latest) {
      pose = this.latest.pose;
      if (this.prev) {
        // draw one frame interval behind the newest sample so motion
        // between 10 Hz ticks stays smooth at display rate
        alpha = Math.min(1, Math.max(0, staleMs / this.frameIntervalMs()));
        pose = lerpPose(this.prev.pose, this.latest.pose, alpha);
      }
    }
    return {
      phase: this.phase,
      ack: this.ack,
      frame: this.latest,
      pose,
      alpha,
      staleMs,
      stalled: this.latest !== null && staleMs > STALE_AFTER_MS,
      partial: this.partial,
      error: this.error,
      inputWarning,
    };
  }
}
