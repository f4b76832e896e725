// Device capture and shaping. Keyboards produce steps, so key input is
// rate-limited into a linear ramp: the raw value crosses the full declared
// range in RAMP_S seconds, and releases ramp back to neutral at the same
// rate (docs/wire-protocol.md, "Client input shaping"). Gamepad axes are
// already proportional and pass straight through after a deadzone.

export const RAMP_S = 0.5;
export const NOMINAL_RATE_HZ = 60;
const DEADZONE = 0.08;

export interface RawCommand {
  steering: number;
  accel: number;
}

class Axis {
  readonly lo: number;
  readonly hi: number;
  readonly neutral: number;
  value: number;
  target: number;
  private readonly rate: number; // raw units per second

  constructor(lo: number, hi: number, rampS: number) {
    this.lo = lo;
    this.hi = hi;
    this.neutral = (lo + hi) / 2;
    this.value = this.neutral;
    this.target = this.neutral;
    this.rate = (hi - lo) / rampS;
  }

  /** dir in {-1, 0, +1}: which endpoint the held keys point at. */
  setDirection(dir: number) {
    this.target = dir > 0 ? this.hi : dir < 0 ? this.lo : this.neutral;
  }

  /** Proportional device: position in [-1, 1] maps straight to the range. */
  setProportional(unit: number) {
    const u = Math.min(1, Math.max(-1, unit));
    this.value = this.neutral + u * (this.hi - this.lo) / 2;
    this.target = this.value;
  }

  reset() {
    this.value = this.neutral;
    this.target = this.neutral;
  }

  tick(dtS: number) {
    const step = this.rate * dtS;
    if (this.value < this.target) {
      this.value = Math.min(this.target, this.value + step);
    } else if (this.value > this.target) {
      this.value = Math.max(this.target, this.value - step);
    }
  }
}

// Positive delta steers toward +y, which is screen-left in the
// behind-the-vehicle view, so ArrowLeft ramps toward the high endpoint.
const STEER_KEYS: Record<string, number> = { ArrowLeft: +1, ArrowRight: -1 };
const ACCEL_KEYS: Record<string, number> = { ArrowUp: +1, ArrowDown: -1 };

export class InputShaper {
  readonly steering: Axis;
  readonly accel: Axis;
  warning: string | null = null;

  private held = new Set<string>();
  private gamepadActive = false;

  constructor(
    steeringRange: [number, number] = [-1, 1],
    accelRange: [number, number] = [-1, 1],
    rampS: number = RAMP_S,
  ) {
    this.steering = new Axis(steeringRange[0], steeringRange[1], rampS);
    this.accel = new Axis(accelRange[0], accelRange[1], rampS);
  }

  /** Returns true when the key belongs to us (caller should preventDefault). */
  keyEvent(code: string, down: boolean): boolean {
    if (!(code in STEER_KEYS) && !(code in ACCEL_KEYS)) return false;
    if (down) this.held.add(code);
    else this.held.delete(code);
    this.gamepadActive = false;
    this.warning = null;
    this.retarget();
    return true;
  }

  private retarget() {
    let steerDir = 0;
    let accelDir = 0;
    for (const code of this.held) {
      steerDir += STEER_KEYS[code] ?? 0;
      accelDir += ACCEL_KEYS[code] ?? 0;
    }
    this.steering.setDirection(steerDir);
    this.accel.setDirection(accelDir);
  }

  /**
   * Feed one gamepad poll. steerAxis follows the standard mapping where
   * -1 is stick-left; we flip it so full-left lands on the high endpoint
   * (+delta_max under the declared convention).
   */
  gamepadSample(steerAxis: number, accelUnit: number) {
    const s = Math.abs(steerAxis) < DEADZONE ? 0 : steerAxis;
    const a = Math.abs(accelUnit) < DEADZONE ? 0 : accelUnit;
    this.steering.setProportional(-s);
    this.accel.setProportional(a);
    this.gamepadActive = true;
    this.warning = null;
  }

  deviceLost() {
    if (!this.gamepadActive) return;
    this.gamepadActive = false;
    this.steering.reset();
    this.accel.reset();
    this.warning = "controller disconnected";
  }

  tick(dtS: number) {
    if (this.gamepadActive) return; // proportional device, no ramp
    this.steering.tick(dtS);
    this.accel.tick(dtS);
  }

  current(): RawCommand {
    return { steering: this.steering.value, accel: this.accel.value };
  }
}

/**
 * Send-rate limiter. The server never expects more than the declared rate
 * plus 10%, so the gate enforces exactly that bound no matter how fast the
 * display loop runs.
 */
export class RateGate {
  private readonly minIntervalMs: number;
  private lastMs = -Infinity;

  constructor(rateHz: number = NOMINAL_RATE_HZ) {
    this.minIntervalMs = 1000 / (rateHz * 1.1);
  }

  allow(nowMs: number): boolean {
    if (nowMs - this.lastMs < this.minIntervalMs) return false;
    this.lastMs = nowMs;
    return true;
  }
}
