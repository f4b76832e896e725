"""Realtime session host: one websocket client drives one rollout.

The wire protocol is JSON text envelopes, one message per websocket text
frame, every envelope carrying "type" and (client -> server on hello,
server -> client always) "version". See docs/wire-protocol.md for the
schema. Summary:

client -> server
  hello   first message; declares protocol version, raw input ranges
          (steering_range, accel_range, invert_steering) and optionally a
          scenario name for directory-serving hosts
  input   raw steering/accel sample in the declared ranges; latest wins
  any attempt to change mode mid-session (toggle_mode, config) -> error
  envelope; the session continues with its fixed mode

server -> client
  hello_ack  session id, mode, timing, lane geometry, actuator limits
  state      one per simulation step, carrying the step index it reflects
  end        session summary (mode, n_steps, partial flag, trajectory id)
  error      code + message; fatal only during the handshake

The simulation itself is the same SimulationLoop the offline harness
runs, so feeding a session record's own command log back through
run_human_in_control / run_autonomy_in_control reproduces the state
sequence exactly. Inputs are zero-order held between client messages
(initially a zero command); a gap longer than the configured staleness
window flags the affected steps in the record.
"""

import asyncio
import json
import math
import uuid
from dataclasses import dataclass
from pathlib import Path

from .config import ScenarioConfig, load_config
from .dynamics import DriverCommand
from .harness import SimulationLoop
from .records import (
    MODE_AUTONOMY,
    U_SOURCE_CONTROLLER,
    U_SOURCE_DRIVER,
    save_record,
)

PROTOCOL_VERSION = 1


class SessionProtocolError(RuntimeError):
    """Handshake could not be completed."""


def _range_pair(value, name):
    try:
        lo, hi = (float(value[0]), float(value[1]))
    except (TypeError, ValueError, IndexError):
        raise SessionProtocolError(f"{name} must be [lo, hi]")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise SessionProtocolError(f"{name} must satisfy lo < hi")
    return lo, hi


@dataclass
class ClientProfile:
    """Input conventions a client declared in its hello message."""

    steering_range: tuple = (-1.0, 1.0)
    accel_range: tuple = (-1.0, 1.0)
    invert_steering: bool = False

    @classmethod
    def from_hello(cls, hello: dict) -> "ClientProfile":
        profile = cls()
        if "steering_range" in hello:
            profile.steering_range = _range_pair(hello["steering_range"], "steering_range")
        if "accel_range" in hello:
            profile.accel_range = _range_pair(hello["accel_range"], "accel_range")
        profile.invert_steering = bool(hello.get("invert_steering", False))
        return profile

    @staticmethod
    def _map(raw, lo, hi, out_max, invert=False):
        raw = min(max(float(raw), lo), hi)
        x = 2.0 * (raw - lo) / (hi - lo) - 1.0
        if invert:
            x = -x
        return x * out_max

    def normalize(self, msg: dict, delta_max: float, a_max: float) -> DriverCommand:
        """Map a raw input message to actuator units; missing axes are neutral."""
        lo, hi = self.steering_range
        delta = (
            self._map(msg["steering"], lo, hi, delta_max, self.invert_steering)
            if "steering" in msg else 0.0
        )
        lo, hi = self.accel_range
        a = self._map(msg["accel"], lo, hi, a_max) if "accel" in msg else 0.0
        return DriverCommand(delta, a)


class _Mailbox:
    """Single-slot latest-wins input store with a staleness clock."""

    def __init__(self, staleness_s: float):
        self.cmd = DriverCommand(0.0, 0.0)
        self.received_at = None
        self.staleness_s = staleness_s

    def deposit(self, cmd: DriverCommand, now: float):
        self.cmd = cmd
        self.received_at = now

    def sample(self, now: float, session_start: float):
        anchor = self.received_at if self.received_at is not None else session_start
        return self.cmd, (now - anchor) > self.staleness_s


async def _send(connection, payload: dict) -> bool:
    try:
        await connection.send(json.dumps(payload))
        return True
    except Exception:  # noqa: BLE001 - any transport failure means gone
        return False


async def _send_error(connection, code: str, message: str):
    await _send(connection, {
        "type": "error", "version": PROTOCOL_VERSION,
        "code": code, "message": message,
    })


async def _read_hello(connection) -> dict:
    """First message must be a version-matched hello."""
    try:
        raw = await connection.recv()
    except Exception as exc:  # noqa: BLE001
        raise SessionProtocolError("client left before hello") from exc
    try:
        msg = json.loads(raw)
    except (json.JSONDecodeError, TypeError):
        await _send_error(connection, "bad-hello", "hello must be a JSON object")
        raise SessionProtocolError("non-JSON hello")
    if not isinstance(msg, dict) or msg.get("type") != "hello":
        await _send_error(connection, "bad-hello", "first message must be type 'hello'")
        raise SessionProtocolError("first message was not hello")
    if msg.get("version") != PROTOCOL_VERSION:
        await _send_error(
            connection, "version-mismatch",
            f"server speaks version {PROTOCOL_VERSION}",
        )
        raise SessionProtocolError(f"client version {msg.get('version')!r}")
    return msg


def _hello_ack(config: ScenarioConfig, session_id: str) -> dict:
    return {
        "type": "hello_ack",
        "version": PROTOCOL_VERSION,
        "session_id": session_id,
        "mode": config.mode,
        "Ts": config.Ts,
        "duration": config.duration,
        "n_steps": config.n_steps,
        "time_scale": config.session.time_scale,
        "lane": {
            "centers": list(config.lane.lane_centers),
            "width": config.lane.lane_width,
            "true_center": config.true_lane_center,
            "d_near": config.lane.d_near,
            "d_far": config.lane.d_far,
        },
        "limits": {
            "delta_max": config.vehicle.delta_max,
            "a_max": config.vehicle.a_max,
        },
    }


def _state_frame(frame: dict, config: ScenarioConfig) -> dict:
    pose = frame["pose"]
    suggested = frame["suggested"]
    weights = frame["weights"]
    applied = frame["applied"]
    return {
        "type": "state",
        "version": PROTOCOL_VERSION,
        "step": frame["step"],
        "t": frame["t"],
        "mode": config.mode,
        "pose": {"x": pose.x, "y": pose.y, "theta": pose.theta, "v": pose.v},
        "lane": {
            "centers": list(config.lane.lane_centers),
            "width": config.lane.lane_width,
            "true_center": config.true_lane_center,
        },
        "applied": {"delta": applied.delta, "a": applied.a},
        "suggested": (
            None if suggested is None
            else {"delta": suggested.delta, "a": suggested.a}
        ),
        "weights": None if weights is None else [float(w) for w in weights],
        "stale": bool(frame["stale"]),
        "done": bool(frame["done"]),
    }


async def _reader(connection, profile: ClientProfile, mailbox: _Mailbox,
                  config: ScenarioConfig, stop: asyncio.Event, clock):
    """Drain the socket into the mailbox until the client goes away."""
    delta_max = config.vehicle.delta_max
    a_max = config.vehicle.a_max
    try:
        async for raw in connection:
            try:
                msg = json.loads(raw)
            except (json.JSONDecodeError, TypeError):
                await _send_error(connection, "bad-message", "not JSON")
                continue
            kind = msg.get("type") if isinstance(msg, dict) else None
            if kind == "input":
                mailbox.deposit(profile.normalize(msg, delta_max, a_max), clock())
            elif kind == "toggle_mode" or (kind == "config" and "mode" in msg):
                await _send_error(
                    connection, "protocol-error",
                    "mode is fixed at session start; run a new session to switch",
                )
            elif kind == "hello":
                await _send_error(connection, "protocol-error", "already greeted")
            else:
                await _send_error(connection, "bad-message", f"unknown type {kind!r}")
    except Exception:  # noqa: BLE001 - closed/errored socket both mean gone
        pass
    finally:
        stop.set()


async def _run_session(config: ScenarioConfig, connection, hello: dict,
                       out_dir=None):
    if config.session.time_scale <= 0:
        raise ValueError("time_scale must be positive")
    profile = ClientProfile.from_hello(hello)
    session_id = uuid.uuid4().hex[:12]
    sim = SimulationLoop(config, driver=None)
    u_source_col = sim.columns.index("u_source")
    expected_source = (
        U_SOURCE_CONTROLLER if config.mode == MODE_AUTONOMY else U_SOURCE_DRIVER
    )

    loop = asyncio.get_running_loop()
    clock = loop.time
    mailbox = _Mailbox(config.session.staleness_ms / 1000.0)
    stop = asyncio.Event()

    if not await _send(connection, _hello_ack(config, session_id)):
        return sim.finish(partial=True)

    reader = asyncio.create_task(
        _reader(connection, profile, mailbox, config, stop, clock)
    )
    ts_wall = config.Ts / config.session.time_scale
    partial = False
    try:
        start = clock()
        for k in range(config.n_steps):
            deadline = start + k * ts_wall
            delay = deadline - clock()
            if delay > 0:
                await asyncio.sleep(delay)
            if stop.is_set():
                partial = True
                break
            cmd, stale = mailbox.sample(clock(), start)
            frame = sim.step(cmd, stale)
            # the architectural invariant: in autonomy mode the human's
            # command never reaches the plant directly
            if sim.rows[-1][u_source_col] != expected_source:
                raise RuntimeError("plant input provenance violated")
            if not await _send(connection, _state_frame(frame, config)):
                partial = True
                break
    finally:
        reader.cancel()

    record = sim.finish(partial=partial)
    if not partial:
        await _send(connection, {
            "type": "end",
            "version": PROTOCOL_VERSION,
            "session_id": session_id,
            "mode": config.mode,
            "n_steps": record.n_steps,
            "partial": False,
            "trajectory_id": record.trajectory_id,
        })
    if out_dir is not None:
        path = Path(out_dir) / f"{record.trajectory_id}.rec"
        save_record(record, path)
    return record


async def host_session(config: ScenarioConfig, connection, out_dir=None):
    """Run one live session over an established connection.

    Performs the hello handshake, paces the loop at Ts / time_scale
    wall-clock seconds per step, and returns the TrajectoryRecord. A
    client disconnect aborts the rollout and the returned record carries
    the partial flag.
    """
    hello = await _read_hello(connection)
    return await _run_session(config, connection, hello, out_dir=out_dir)


def _resolve_scenario(config_dir, name):
    if name is None:
        name = "default"
    if not isinstance(name, str) or any(sep in name for sep in ("/", "\\", "..")):
        raise SessionProtocolError(f"bad scenario name {name!r}")
    path = Path(config_dir) / f"{name}.yaml"
    if not path.exists():
        raise SessionProtocolError(f"no scenario {name!r} in {config_dir}")
    return load_config(path)


async def serve(port: int, config: ScenarioConfig = None, config_dir=None,
                out_dir=None, host: str = "127.0.0.1", ready: asyncio.Event = None):
    """Accept websocket clients forever; one independent session each.

    With config_dir, the client's hello may name a scenario ("scenario":
    "foo" loads config_dir/foo.yaml, default "default"). A fixed config
    takes precedence when both are given.
    """
    import websockets

    if config is None and config_dir is None:
        raise ValueError("need a config or a config_dir")

    async def handler(connection):
        try:
            hello = await _read_hello(connection)
        except SessionProtocolError:
            return
        try:
            cfg = config if config is not None else _resolve_scenario(
                config_dir, hello.get("scenario"))
        except SessionProtocolError as exc:
            await _send_error(connection, "bad-scenario", str(exc))
            return
        await _run_session(cfg, connection, hello, out_dir=out_dir)

    async with websockets.serve(handler, host, port):
        if ready is not None:
            ready.set()
        await asyncio.Future()
