import { SessionClient, type Transport } from "./client.js";
import { InputShaper, RateGate } from "./input.js";
import { buildScene, drawScene } from "./render.js";
import { SessionStore } from "./state.js";

// Browser entry point. Everything runs on the main event loop: socket and
// keyboard callbacks only deposit state, and the animation-frame loop is
// the single place that reads it, sends input, and paints.

function wsTransport(url: string): Transport {
  const ws = new WebSocket(url);
  return {
    send: (data) => {
      if (ws.readyState !== WebSocket.OPEN) throw new Error("socket not open");
      ws.send(data);
    },
    close: () => ws.close(),
    onOpen: (cb) => ws.addEventListener("open", cb),
    onMessage: (cb) => ws.addEventListener("message", (ev) => cb(String(ev.data))),
    onClose: (cb) => ws.addEventListener("close", () => cb()),
  };
}

function start() {
  const params = new URLSearchParams(location.search);
  const host = params.get("host") ?? "127.0.0.1";
  const port = params.get("port") ?? "8700";
  const scenario = params.get("scenario") ?? undefined;

  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const fit = () => {
    canvas.width = canvas.clientWidth * devicePixelRatio;
    canvas.height = canvas.clientHeight * devicePixelRatio;
  };
  fit();
  addEventListener("resize", fit);

  const store = new SessionStore();
  const shaper = new InputShaper();
  const gate = new RateGate();
  const client = new SessionClient(wsTransport(`ws://${host}:${port}`), store, { scenario });

  addEventListener("keydown", (ev) => {
    if (ev.repeat) return; // the shaper ramps by itself while held
    if (shaper.keyEvent(ev.code, true)) ev.preventDefault();
  });
  addEventListener("keyup", (ev) => {
    if (shaper.keyEvent(ev.code, false)) ev.preventDefault();
  });
  addEventListener("gamepaddisconnected", () => shaper.deviceLost());

  let lastT = performance.now();
  const loop = (nowMs: number) => {
    const dt = Math.min(0.1, (nowMs - lastT) / 1000);
    lastT = nowMs;

    const pads = navigator.getGamepads?.() ?? [];
    const pad = pads.find((p) => p !== null);
    if (pad) {
      const throttle = pad.buttons[7]?.value ?? 0;
      const brake = pad.buttons[6]?.value ?? 0;
      shaper.gamepadSample(pad.axes[0] ?? 0, throttle - brake);
    }
    shaper.tick(dt);

    if (gate.allow(nowMs)) {
      const cmd = shaper.current();
      client.sendInput(cmd.steering, cmd.accel, nowMs);
    }

    const view = store.view(nowMs, shaper.warning);
    const scene = buildScene(view, canvas.width, canvas.height);
    drawScene(ctx, scene);
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

start();
