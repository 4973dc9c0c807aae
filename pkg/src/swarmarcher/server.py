"""Websocket game service: one GameSession per connection.

Per session, a reader task applies inbound messages and a ticker task
advances the environment at 1/dt Hz while sending telemetry at the
configured frame rate; both serialize state access through one lock, so
each session has a single logical writer. Sessions are independent.

Frame f carries the scene at sim time f / telemetry_hz. The environment is
stepped whenever that time crosses a step boundary, so frames landing on a
boundary carry exact state and frames in between carry blended positions
marked `interpolated` (presentation only).
"""

import asyncio
import itertools
import logging

import websockets

from .a2c import load_agents
from .config import RunConfig
from .session import GameSession

log = logging.getLogger("swarmarcher.serve")

_EPS = 1e-9


def _frame_blend(sim_t: float, t_frame: float, dt: float) -> float:
    """Mix weight between the previous and current env states for a frame
    at t_frame, given the ticker has advanced the env to sim time sim_t
    (sim_t is tracked by the ticker itself so episode resets, which zero
    the env's own step counter, cannot skew it)."""
    if sim_t <= t_frame + _EPS:
        return 1.0  # frame lands exactly on a step boundary
    return max(0.0, 1.0 - (sim_t - t_frame) / dt)


async def run_session(websocket, rc: RunConfig, agents, session_id: str):
    session = GameSession(rc, session_id, agents=agents)
    lock = asyncio.Lock()
    hz = rc.serve.telemetry_hz
    dt = session.env.config.dt
    period = 1.0 / hz

    async def ticker():
        loop = asyncio.get_running_loop()
        next_wall = loop.time()
        frame = 0
        # env steps the ticker has produced; kept here because episode
        # resets zero the env's own counter (an integer times dt stays
        # exact where a float accumulator would drift over long sessions)
        steps_done = 0
        while True:
            delay = next_wall - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            next_wall += period
            t_frame = frame / hz
            async with lock:
                events = []
                # step until the environment covers the frame time, so
                # off-boundary frames blend the two surrounding states
                while steps_done * dt < t_frame - _EPS:
                    events.extend(session.tick())
                    steps_done += 1
                blend = _frame_blend(steps_done * dt, t_frame, dt)
                frames = events + [session.telemetry_message(blend)]
            for m in frames:
                await websocket.send(m)
            frame += 1

    ticker_task = asyncio.create_task(ticker())
    try:
        async for raw in websocket:
            async with lock:
                replies = session.handle_message(raw)
            for r in replies:
                await websocket.send(r)
    except websockets.ConnectionClosed:
        pass
    finally:
        ticker_task.cancel()
        try:
            await ticker_task
        except (asyncio.CancelledError, websockets.ConnectionClosed):
            pass
    log.info("session %s closed (score %d)", session_id, session.score)


async def start_server(rc: RunConfig):
    """Bind the service and return the listening websocket server."""
    agents = None
    if rc.serve.weights_path:
        agents = load_agents(rc.serve.weights_path, expect_state_dim=rc.env.state_dim)
        log.info("loaded drl weights from %s", rc.serve.weights_path)
    ids = itertools.count(1)

    async def handler(websocket):
        await run_session(websocket, rc, agents, f"s{next(ids)}")

    server = await websockets.serve(handler, rc.serve.host, rc.serve.port)
    port = server.sockets[0].getsockname()[1] if server.sockets else rc.serve.port
    log.info("listening on ws://%s:%d", rc.serve.host, port)
    return server


async def serve_forever(rc: RunConfig):
    """Accept connections until cancelled."""
    server = await start_server(rc)
    try:
        await asyncio.get_running_loop().create_future()
    finally:
        server.close()
        await server.wait_closed()
