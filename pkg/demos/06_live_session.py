"""A scripted client weaves down the road over the real wire protocol.

Starts the session service on a local port, connects a websocket client
that declares a gamepad-style [0, 100] steering range, streams a small
open-loop steering wave (no lane keeping, so the path drifts), and
collects the state frames. Afterwards the saved record is replayed
offline through the simulation loop to show that a live session and its
replay are the same trajectory.

The session runs time-accelerated (time_scale=50) so the demo finishes in
under a second of wall time.
"""

import asyncio
import json
import math
import socket
import tempfile
from pathlib import Path

import numpy as np
import websockets

from drivelab.config import (
    DriverParams,
    ScenarioConfig,
    SessionParams,
    save_config,
)
from drivelab.harness import ReplayDriver, run_human_in_control
from drivelab.records import load_record
from drivelab.session import serve


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


async def client(port, frames):
    async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
        await ws.send(json.dumps({
            "type": "hello",
            "version": 1,
            "client": "scripted-demo",
            "steering_range": [0, 100],
        }))
        k = 0
        async for raw in ws:
            msg = json.loads(raw)
            if msg["type"] == "state":
                frames.append(msg)
                if msg["done"]:
                    continue
                # gentle wave, centered on the declared [0, 100] range;
                # accel stays at the neutral point of its default range
                raw_steer = 50 + 2 * math.sin(0.5 * k)
                k += 1
                try:
                    await ws.send(json.dumps({
                        "type": "input",
                        "steering": raw_steer,
                        "accel": 0,
                    }))
                except websockets.exceptions.ConnectionClosed:
                    break  # server already past its last step
            elif msg["type"] == "end":
                print(f"end frame: {msg['n_steps']} steps, "
                      f"partial={msg['partial']}")
                return


async def run(tmp):
    cfg = ScenarioConfig(
        duration=10.0,
        driver=DriverParams(kind="live-session"),
        session=SessionParams(time_scale=50.0),
    )
    save_config(cfg, tmp / "default.yaml")

    port = free_port()
    ready = asyncio.Event()
    frames = []
    server_task = asyncio.create_task(
        serve(port, config_dir=tmp, out_dir=tmp, ready=ready)
    )
    await asyncio.wait_for(ready.wait(), timeout=5)
    await asyncio.wait_for(client(port, frames), timeout=30)
    server_task.cancel()
    return frames


def main():
    with tempfile.TemporaryDirectory() as d:
        tmp = Path(d)
        frames = asyncio.run(run(tmp))
        print(f"received {len(frames)} state frames")
        ys = [f["pose"]["y"] for f in frames]
        print(f"lateral range during the wave: "
              f"[{min(ys):+.2f}, {max(ys):+.2f}] m")

        recs = list(tmp.glob("*.rec"))
        record = load_record(recs[0])
        replay = run_human_in_control(
            ScenarioConfig(
                duration=10.0, driver=DriverParams(kind="live-session")
            ),
            driver=ReplayDriver.from_record(record),
        )
        same = np.array_equal(replay.data, record.data)
        print(f"offline replay of the saved record matches: {same}")


if __name__ == "__main__":
    main()
