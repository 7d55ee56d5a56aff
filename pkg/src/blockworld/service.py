"""FastAPI service: the duplex /ws stream plus read-only admin HTTP.

One asyncio lock per world stands in for the per-world sequencer thread;
each connection gets an outbound queue and writer task so broadcast fan-out
never reorders or blocks on a slow client.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, PlainTextResponse
from pydantic import BaseModel

from . import protocol as proto
from .registry import WorldRegistry
from .storage import StorageFailure

logger = logging.getLogger(__name__)


class WorldInfo(BaseModel):
    id: str
    kind: str
    marker: Optional[str] = None
    seq: int
    blocks_live: int
    users_online: int


class SnapshotResponse(BaseModel):
    world: str
    seq: int
    blocks: list[dict]
    users: list[str]
    adds: int


class HealthResponse(BaseModel):
    ok: bool


class _Connection:
    def __init__(self, ws: WebSocket):
        self.ws = ws
        self.user: Optional[str] = None
        self.world_id: Optional[str] = None
        self.queue: asyncio.Queue = asyncio.Queue()
        self.writer: Optional[asyncio.Task] = None
        self.alive = True

    def push(self, msg) -> None:
        if self.alive:
            self.queue.put_nowait(proto.encode(msg))

    async def drain(self) -> None:
        while True:
            data = await self.queue.get()
            await self.ws.send_text(data.decode("utf-8"))


class ServiceState:
    def __init__(self, registry: WorldRegistry):
        self.registry = registry
        self.locks: dict[str, asyncio.Lock] = {}
        self.world_conns: dict[str, dict[int, _Connection]] = {}
        self.presence_pending: set[str] = set()

    def lock(self, world_id: str) -> asyncio.Lock:
        return self.locks.setdefault(world_id, asyncio.Lock())

    def conns(self, world_id: str) -> dict[int, _Connection]:
        return self.world_conns.setdefault(world_id, {})

    def broadcast(self, world_id: str, msg) -> None:
        for conn in list(self.conns(world_id).values()):
            conn.push(msg)

    def schedule_presence(self, world_id: str) -> None:
        if world_id in self.presence_pending:
            return
        self.presence_pending.add(world_id)
        asyncio.get_running_loop().create_task(self._flush_presence(world_id))

    async def _flush_presence(self, world_id: str) -> None:
        await asyncio.sleep(0.1)  # coalesce cursor churn to <= 10 frames/s
        self.presence_pending.discard(world_id)
        host = self.registry.get(world_id)
        if host is not None:
            self.broadcast(world_id, host.presence_msg())


def create_app(registry: WorldRegistry) -> FastAPI:
    app = FastAPI(title="blockworld")
    svc = ServiceState(registry)
    app.state.service = svc

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(ok=True)

    @app.get("/worlds", response_model=list[WorldInfo])
    def worlds():
        out = []
        for world_id, host in registry.hosts.items():
            s = host.state
            out.append(
                WorldInfo(
                    id=world_id,
                    kind=s.kind,
                    marker=s.marker_id,
                    seq=s.last_seq,
                    blocks_live=len(s.blocks),
                    users_online=len(s.presence),
                )
            )
        return out

    @app.get("/worlds/{world_id}/snapshot", response_model=SnapshotResponse)
    def snapshot(world_id: str):
        host = registry.get(world_id)
        if host is None:
            raise HTTPException(status_code=404, detail=f"no world {world_id}")
        msg = host.snapshot_msg()
        return SnapshotResponse(world=msg.world_id, seq=msg.seq, blocks=msg.blocks, users=msg.users, adds=msg.adds)

    @app.get("/worlds/{world_id}/export")
    def export(world_id: str):
        host = registry.get(world_id)
        if host is None or host.log is None:
            raise HTTPException(status_code=404, detail=f"no world {world_id}")
        path = host.log.path
        if not path.exists():
            return PlainTextResponse("", media_type="application/x-ndjson")
        return FileResponse(path, media_type="application/x-ndjson", filename=f"{world_id}.ndjson")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        conn = _Connection(ws)
        conn.writer = asyncio.create_task(conn.drain())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = proto.decode(raw)
                except proto.MalformedMessage as e:
                    conn.push(proto.Reject(None, f"{proto.REASON_MALFORMED}: {e.detail}"))
                    continue
                try:
                    await _dispatch(svc, conn, msg)
                except StorageFailure:
                    logger.exception("append failed; closing connection, world read-only")
                    break
        except WebSocketDisconnect:
            pass
        finally:
            conn.alive = False
            if conn.writer:
                conn.writer.cancel()
            await _part_world(svc, conn)

    return app


async def _dispatch(svc: ServiceState, conn: _Connection, msg) -> None:
    registry = svc.registry
    now = registry.clock()

    if isinstance(msg, proto.Hello):
        welcome = registry.handle_connect(msg)
        conn.user = welcome.user
        conn.push(welcome)
        return

    if conn.user is None:
        conn.push(proto.Reject(None, proto.REASON_MALFORMED))
        return

    if isinstance(msg, proto.JoinWorld):
        host = registry.get(msg.world_id)
        if host is None or not registry.may_join(conn.user, msg.world_id):
            conn.push(proto.Reject(None, proto.REASON_MALFORMED))
            return
        if conn.world_id is not None and conn.world_id != msg.world_id:
            await _part_world(svc, conn)
        async with svc.lock(msg.world_id):
            try:
                msgs, join_event = host.join(conn.user, now, msg.after_seq)
            except proto.FutureSeqError:
                conn.push(proto.Reject(None, proto.REASON_MALFORMED))
                return
            conn.world_id = msg.world_id
            svc.conns(msg.world_id)[id(conn)] = conn
            if join_event is not None:
                svc.broadcast(msg.world_id, join_event)
                svc.schedule_presence(msg.world_id)
            for m in msgs:
                conn.push(m)
        return

    world_id = conn.world_id
    host = registry.get(world_id) if world_id else None
    if host is None:
        op = getattr(msg, "op_id", None)
        conn.push(proto.Reject(op, proto.REASON_MALFORMED))
        return

    if isinstance(msg, proto.MUTATING):
        async with svc.lock(world_id):
            outcome = host.submit(msg, conn.user, now)
            if isinstance(outcome, proto.EventMsg):
                svc.broadcast(world_id, outcome)
            else:
                conn.push(outcome)
        return

    if isinstance(msg, proto.CursorUpdate):
        async with svc.lock(world_id):
            host.cursor_update(conn.user, msg)
        svc.schedule_presence(world_id)
        return

    if isinstance(msg, proto.MarkerObserved):
        async with svc.lock(world_id):
            outcome = host.observe_marker(conn.user, msg, now)
            if isinstance(outcome, proto.EventMsg):
                svc.broadcast(world_id, outcome)
            else:
                conn.push(outcome)
        return

    if isinstance(msg, proto.Leave):
        await _part_world(svc, conn, ack_to=conn)
        return

    conn.push(proto.Reject(None, proto.REASON_MALFORMED))


async def _part_world(svc: ServiceState, conn: _Connection, ack_to: Optional[_Connection] = None) -> None:
    """Sequence a leave for the connection's current world, if any."""
    world_id, user = conn.world_id, conn.user
    conn.world_id = None
    if world_id is None or user is None:
        return
    svc.conns(world_id).pop(id(conn), None)
    host = svc.registry.get(world_id)
    if host is None:
        return
    if any(c.user == user for c in svc.conns(world_id).values()):
        return  # another tab of the same user is still in the world
    async with svc.lock(world_id):
        try:
            event = host.leave(user, svc.registry.clock())
        except StorageFailure:
            logger.exception("failed to persist leave for %s", user)
            return
        if event is not None:
            svc.broadcast(world_id, event)
            if ack_to is not None:
                ack_to.push(event)
            svc.schedule_presence(world_id)
