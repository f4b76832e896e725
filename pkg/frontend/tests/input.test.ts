import { describe, expect, it } from "vitest";
import { InputShaper, RateGate, RAMP_S } from "../src/input.js";

function tickFor(shaper: InputShaper, seconds: number, dt = 1 / 60) {
  // fixed 60 Hz steps, remainder handled exactly
  let left = seconds;
  while (left > 1e-12) {
    const step = Math.min(dt, left);
    shaper.tick(step);
    left -= step;
  }
}

describe("neutral", () => {
  it("produces (0, 0) with the default ranges", () => {
    const shaper = new InputShaper();
    expect(shaper.current()).toEqual({ steering: 0, accel: 0 });
  });

  it("rests at the midpoint of an asymmetric range", () => {
    const shaper = new InputShaper([0, 100], [-5, 5]);
    expect(shaper.current()).toEqual({ steering: 50, accel: 0 });
  });
});

describe("key ramp", () => {
  it("covers the full declared range in RAMP_S seconds", () => {
    const shaper = new InputShaper();
    shaper.keyEvent("ArrowRight", true);
    tickFor(shaper, RAMP_S / 2);
    expect(shaper.current().steering).toBeCloseTo(-1, 9); // neutral to endpoint is half the range
    shaper.keyEvent("ArrowRight", false);
    shaper.keyEvent("ArrowLeft", true);
    tickFor(shaper, RAMP_S); // low endpoint to high endpoint is the full range
    expect(shaper.current().steering).toBeCloseTo(1, 9);
  });

  it("is rate-limited: no step discontinuities", () => {
    const shaper = new InputShaper();
    shaper.keyEvent("ArrowLeft", true);
    const dt = 1 / 60;
    const maxStep = (2 / RAMP_S) * dt + 1e-12;
    let prev = shaper.current().steering;
    for (let i = 0; i < 40; i++) {
      shaper.tick(dt);
      const cur = shaper.current().steering;
      expect(cur).toBeGreaterThanOrEqual(prev);
      expect(cur - prev).toBeLessThanOrEqual(maxStep);
      prev = cur;
    }
  });

  it("ramps back to neutral at the same rate on release", () => {
    const shaper = new InputShaper();
    shaper.keyEvent("ArrowLeft", true);
    tickFor(shaper, RAMP_S);
    expect(shaper.current().steering).toBeCloseTo(1, 9);
    shaper.keyEvent("ArrowLeft", false);
    tickFor(shaper, RAMP_S / 4);
    expect(shaper.current().steering).toBeCloseTo(0.5, 9);
    tickFor(shaper, RAMP_S / 4);
    expect(shaper.current().steering).toBeCloseTo(0, 9);
    tickFor(shaper, 1);
    expect(shaper.current().steering).toBe(0); // no overshoot past neutral
  });

  it("holds neutral when opposing keys are both down", () => {
    const shaper = new InputShaper();
    shaper.keyEvent("ArrowLeft", true);
    shaper.keyEvent("ArrowRight", true);
    tickFor(shaper, 1);
    expect(shaper.current().steering).toBe(0);
  });

  it("shapes the acceleration keys the same way", () => {
    const shaper = new InputShaper([-1, 1], [-3, 3]);
    shaper.keyEvent("ArrowUp", true);
    tickFor(shaper, RAMP_S / 2);
    expect(shaper.current().accel).toBeCloseTo(3, 9);
    shaper.keyEvent("ArrowUp", false);
    shaper.keyEvent("ArrowDown", true);
    tickFor(shaper, RAMP_S);
    expect(shaper.current().accel).toBeCloseTo(-3, 9);
  });

  it("ignores keys that are not bound", () => {
    const shaper = new InputShaper();
    expect(shaper.keyEvent("KeyQ", true)).toBe(false);
    expect(shaper.keyEvent("ArrowLeft", true)).toBe(true);
  });
});

describe("gamepad", () => {
  it("full-left axis hits the high endpoint (plus delta_max once normalized)", () => {
    const shaper = new InputShaper();
    shaper.gamepadSample(-1, 0);
    expect(shaper.current().steering).toBe(1);
    shaper.gamepadSample(1, 0);
    expect(shaper.current().steering).toBe(-1);
  });

  it("passes proportional positions through without ramping", () => {
    const shaper = new InputShaper([0, 100], [-1, 1]);
    shaper.gamepadSample(-0.5, 0.25);
    expect(shaper.current().steering).toBeCloseTo(75, 9);
    expect(shaper.current().accel).toBeCloseTo(0.25, 9);
    shaper.tick(1); // ticks must not drag a proportional device toward anything
    expect(shaper.current().steering).toBeCloseTo(75, 9);
  });

  it("applies a deadzone around center", () => {
    const shaper = new InputShaper();
    shaper.gamepadSample(0.05, -0.05);
    expect(shaper.current()).toEqual({ steering: 0, accel: 0 });
  });

  it("zeroes the command and warns on disconnect", () => {
    const shaper = new InputShaper();
    shaper.gamepadSample(-1, 0.5);
    shaper.deviceLost();
    expect(shaper.current()).toEqual({ steering: 0, accel: 0 });
    expect(shaper.warning).toBe("controller disconnected");
    shaper.keyEvent("ArrowLeft", true); // falling back to keys clears the warning
    expect(shaper.warning).toBeNull();
  });

  it("does not warn when no gamepad was ever active", () => {
    const shaper = new InputShaper();
    shaper.deviceLost();
    expect(shaper.warning).toBeNull();
  });
});

describe("rate gate", () => {
  it("caps a fast display loop at the declared rate plus 10%", () => {
    const gate = new RateGate(60);
    let sent = 0;
    for (let now = 0; now < 2000; now += 1000 / 240) {
      if (gate.allow(now)) sent++;
    }
    expect(sent).toBeLessThanOrEqual(2 * 66 + 1);
    expect(sent).toBeGreaterThanOrEqual(2 * 55); // still near nominal
  });

  it("never throttles a loop already at nominal rate", () => {
    const gate = new RateGate(60);
    let sent = 0;
    for (let k = 0; k < 60; k++) {
      if (gate.allow(k * (1000 / 60))) sent++;
    }
    expect(sent).toBe(60);
  });
});
