import type { ClientView } from "./state.js";

// buildScene turns a ClientView into a flat list of draw primitives. It is
// a pure function: same view in, same list out, no clocks and no randomness
// (the dash phase comes from pose.x). drawScene at the bottom is the only
// code that touches the canvas.
//
// Camera: behind and above, travelling with the vehicle along x but held
// laterally over the midpoint between the candidate lane centers, so both
// the true and the ghost markings stay in view.

export type DrawOp =
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: string; tag?: string }
  | { kind: "poly"; points: number[][]; fill: string; tag?: string }
  | { kind: "line"; points: number[][]; stroke: string; width: number; tag?: string }
  | { kind: "text"; x: number; y: number; text: string; fill: string; size: number; align?: CanvasTextAlign; tag?: string };

export type Scene = DrawOp[];

export const CAMERA = {
  horizonFrac: 0.34,
  bottomFrac: 0.97,
  nearScale: 6,    // perspective factor p = nearScale / (nearScale + d)
  dNear: 2,        // closest drawn distance, m ahead of the camera
  dFar: 80,
  ppmFrac: 1 / 9,  // pixels per meter at p = 1, as a fraction of width
  vehicleDistance: 7,
};

const CAR_LENGTH = 4.4;
const CAR_WIDTH = 1.8;
const SHOULDER = 0.9;

const C = {
  sky: "#a9c3d9",
  ground: "#6f8f63",
  road: "#565b61",
  edge: "#e9e9e9",
  trueMark: "#2fa352",
  ghostMark: "#cc4338",
  car: "#2a59ad",
  cabin: "#16315f",
  hudText: "#ffffff",
  hudDim: "#d7dce2",
  badge: "#00000073",
  banner: "#b32f2fd9",
  gaugeBg: "#00000055",
};

export function projectPoint(
  yWorld: number, d: number, W: number, H: number, camY: number,
): { x: number; y: number; p: number } {
  const p = CAMERA.nearScale / (CAMERA.nearScale + d);
  const horizonY = CAMERA.horizonFrac * H;
  const bottomY = CAMERA.bottomFrac * H;
  // +y is the vehicle's left, which is screen-left from behind
  return {
    x: W / 2 - (yWorld - camY) * (CAMERA.ppmFrac * W) * p,
    y: horizonY + (bottomY - horizonY) * p,
    p,
  };
}

/** Dashed world-space line along the road at lateral offset yWorld. */
function dashes(
  scene: Scene, yWorld: number, onM: number, offM: number, phase: number,
  stroke: string, width: number, tag: string, W: number, H: number, camY: number,
) {
  const period = onM + offM;
  // first dash start at or before dNear, shifted by the travel phase
  let d = CAMERA.dNear - (((phase % period) + period) % period);
  for (; d < CAMERA.dFar; d += period) {
    const a = Math.max(d, CAMERA.dNear);
    const b = Math.min(d + onM, CAMERA.dFar);
    if (b <= a) continue;
    const pa = projectPoint(yWorld, a, W, H, camY);
    const pb = projectPoint(yWorld, b, W, H, camY);
    scene.push({
      kind: "line",
      points: [[pa.x, pa.y], [pb.x, pb.y]],
      stroke,
      width: width * pa.p,
      tag,
    });
  }
}

function solidLine(
  scene: Scene, yWorld: number, stroke: string, width: number, tag: string | undefined,
  W: number, H: number, camY: number,
) {
  const pa = projectPoint(yWorld, CAMERA.dNear, W, H, camY);
  const pb = projectPoint(yWorld, CAMERA.dFar, W, H, camY);
  scene.push({ kind: "line", points: [[pa.x, pa.y], [pb.x, pb.y]], stroke, width, tag });
}

function banner(scene: Scene, text: string, W: number, H: number, tag: string, fill = C.banner) {
  scene.push({ kind: "rect", x: 0, y: H * 0.42, w: W, h: 44, fill, tag });
  scene.push({
    kind: "text", x: W / 2, y: H * 0.42 + 29, text,
    fill: C.hudText, size: 20, align: "center", tag,
  });
}

export function buildScene(view: ClientView, W: number, H: number): Scene {
  const scene: Scene = [];
  scene.push({ kind: "rect", x: 0, y: 0, w: W, h: H, fill: C.sky });

  const frame = view.frame;
  if (!frame || !view.pose) {
    scene.push({
      kind: "text", x: W / 2, y: H / 2, text: "waiting for server",
      fill: C.hudDim, size: 22, align: "center", tag: "waiting",
    });
    if (view.phase === "error" && view.error) {
      banner(scene, `${view.error.code}: ${view.error.message}`, W, H, "error-banner");
    }
    return scene;
  }

  const lane = frame.lane;
  const centers = lane.centers.length ? lane.centers : [lane.true_center];
  const camY = (Math.min(...centers) + Math.max(...centers)) / 2;
  const horizonY = CAMERA.horizonFrac * H;
  const pose = view.pose;
  const half = lane.width / 2;

  // ground and road surface
  scene.push({ kind: "rect", x: 0, y: horizonY, w: W, h: H - horizonY, fill: C.ground });
  const leftEdge = Math.max(...centers) + half + SHOULDER;
  const rightEdge = Math.min(...centers) - half - SHOULDER;
  const nl = projectPoint(leftEdge, CAMERA.dNear, W, H, camY);
  const nr = projectPoint(rightEdge, CAMERA.dNear, W, H, camY);
  const fl = projectPoint(leftEdge, CAMERA.dFar, W, H, camY);
  const fr = projectPoint(rightEdge, CAMERA.dFar, W, H, camY);
  scene.push({
    kind: "poly",
    points: [[nl.x, nl.y], [nr.x, nr.y], [fr.x, fr.y], [fl.x, fl.y]],
    fill: C.road,
    tag: "road",
  });
  solidLine(scene, leftEdge, C.edge, 3, "road-edge", W, H, camY);
  solidLine(scene, rightEdge, C.edge, 3, "road-edge", W, H, camY);

  // candidate lane markings: boundary dashes plus a center stripe, green
  // for the true candidate and red for the ghost
  const phase = pose.x;
  for (const c of centers) {
    const isTrue = c === lane.true_center;
    const color = isTrue ? C.trueMark : C.ghostMark;
    const role = isTrue ? "true" : "ghost";
    dashes(scene, c + half, 3, 3, phase, color, 4, `marking-${role}-left`, W, H, camY);
    dashes(scene, c - half, 3, 3, phase, color, 4, `marking-${role}-right`, W, H, camY);
    dashes(scene, c, 1.2, 4.8, phase, color, 2.5, `marking-${role}-center`, W, H, camY);
  }

  // vehicle body: rear edge first (points 0 and 1), then the front pair,
  // front shifted laterally by the heading
  const dv = CAMERA.vehicleDistance;
  const yFront = pose.y + Math.sin(pose.theta) * CAR_LENGTH;
  const rl = projectPoint(pose.y + CAR_WIDTH / 2, dv, W, H, camY);
  const rr = projectPoint(pose.y - CAR_WIDTH / 2, dv, W, H, camY);
  const frnt = {
    l: projectPoint(yFront + CAR_WIDTH * 0.46, dv + CAR_LENGTH, W, H, camY),
    r: projectPoint(yFront - CAR_WIDTH * 0.46, dv + CAR_LENGTH, W, H, camY),
  };
  scene.push({
    kind: "poly",
    points: [[rl.x, rl.y], [rr.x, rr.y], [frnt.r.x, frnt.r.y], [frnt.l.x, frnt.l.y]],
    fill: C.car,
    tag: "vehicle",
  });
  const cab = {
    rl: projectPoint(pose.y + CAR_WIDTH * 0.32, dv + CAR_LENGTH * 0.28, W, H, camY),
    rr: projectPoint(pose.y - CAR_WIDTH * 0.32, dv + CAR_LENGTH * 0.28, W, H, camY),
    fl: projectPoint(yFront + CAR_WIDTH * 0.3, dv + CAR_LENGTH * 0.72, W, H, camY),
    fr: projectPoint(yFront - CAR_WIDTH * 0.3, dv + CAR_LENGTH * 0.72, W, H, camY),
  };
  scene.push({
    kind: "poly",
    points: [[cab.rl.x, cab.rl.y], [cab.rr.x, cab.rr.y], [cab.fr.x, cab.fr.y], [cab.fl.x, cab.fl.y]],
    fill: C.cabin,
    tag: "vehicle-cabin",
  });

  // HUD: mode badge, elapsed time, steering gauge, weights
  scene.push({ kind: "rect", x: 10, y: 10, w: 196, h: 30, fill: C.badge, tag: "mode-badge" });
  scene.push({
    kind: "text", x: 18, y: 30, text: frame.mode, fill: C.hudText,
    size: 14, align: "left", tag: "mode-badge",
  });
  scene.push({
    kind: "text", x: W - 14, y: 30, text: `t = ${frame.t.toFixed(1)} s`,
    fill: C.hudText, size: 14, align: "right", tag: "elapsed",
  });

  const ack = view.ack;
  const deltaMax = ack ? ack.limits.delta_max : 0.5;
  const gx = W / 2, gy = H - 34, gw = Math.min(240, W * 0.3);
  scene.push({ kind: "rect", x: gx - gw / 2, y: gy - 10, w: gw, h: 20, fill: C.gaugeBg, tag: "gauge" });
  scene.push({ kind: "line", points: [[gx, gy - 10], [gx, gy + 10]], stroke: C.hudDim, width: 1, tag: "gauge" });
  const tick = (delta: number, stroke: string, width: number, tag: string) => {
    const u = Math.min(1, Math.max(-1, delta / deltaMax));
    // +delta steers left, so the tick moves screen-left
    const x = gx - u * gw / 2;
    scene.push({ kind: "line", points: [[x, gy - 9], [x, gy + 9]], stroke, width, tag });
  };
  tick(frame.applied.delta, C.hudText, 3, "gauge-applied");

  const autonomy = frame.mode === "autonomy-in-control";
  if (autonomy) {
    if (frame.suggested) tick(frame.suggested.delta, C.ghostMark, 2, "gauge-suggested");
    scene.push({
      kind: "text", x: gx, y: gy + 28, text: "input: advisory (vehicle may not follow)",
      fill: C.hudDim, size: 13, align: "center", tag: "advisory",
    });
  } else {
    scene.push({
      kind: "text", x: gx, y: gy + 28, text: "input: direct",
      fill: C.hudDim, size: 13, align: "center", tag: "input-direct",
    });
  }
  if (autonomy && frame.weights) {
    const labels = frame.weights.map((w, i) => `w${i} = ${w.toFixed(2)}`).join("   ");
    scene.push({
      kind: "text", x: 18, y: 58, text: labels, fill: C.hudText,
      size: 13, align: "left", tag: "weights",
    });
    frame.weights.forEach((w, i) => {
      scene.push({
        kind: "rect", x: 18 + i * 64, y: 64, w: 56 * Math.max(0, Math.min(1, w)), h: 6,
        fill: C.trueMark, tag: "weights",
      });
    });
  }

  if (frame.stale) {
    scene.push({
      kind: "text", x: W - 14, y: 52, text: "input stale",
      fill: C.ghostMark, size: 13, align: "right", tag: "stale-input",
    });
  }
  if (view.inputWarning) {
    banner(scene, view.inputWarning, W, H, "input-warning");
  }
  if (view.stalled) {
    banner(scene, `signal lost: no frames for ${(view.staleMs / 1000).toFixed(1)} s`, W, H, "staleness");
  }
  if (view.phase === "closed") {
    banner(scene, view.partial ? "connection lost (partial session)" : "connection lost", W, H, "closed-banner");
  } else if (view.phase === "ended") {
    banner(scene, "session complete", W, H, "session-complete", C.badge);
  }
  return scene;
}

export function drawScene(ctx: CanvasRenderingContext2D, scene: Scene) {
  for (const op of scene) {
    switch (op.kind) {
      case "rect":
        ctx.fillStyle = op.fill;
        ctx.fillRect(op.x, op.y, op.w, op.h);
        break;
      case "poly": {
        ctx.fillStyle = op.fill;
        ctx.beginPath();
        ctx.moveTo(op.points[0][0], op.points[0][1]);
        for (let i = 1; i < op.points.length; i++) ctx.lineTo(op.points[i][0], op.points[i][1]);
        ctx.closePath();
        ctx.fill();
        break;
      }
      case "line":
        ctx.strokeStyle = op.stroke;
        ctx.lineWidth = op.width;
        ctx.beginPath();
        ctx.moveTo(op.points[0][0], op.points[0][1]);
        for (let i = 1; i < op.points.length; i++) ctx.lineTo(op.points[i][0], op.points[i][1]);
        ctx.stroke();
        break;
      case "text":
        ctx.fillStyle = op.fill;
        ctx.font = `${op.size}px system-ui, sans-serif`;
        ctx.textAlign = op.align ?? "left";
        ctx.fillText(op.text, op.x, op.y);
        break;
    }
  }
}
