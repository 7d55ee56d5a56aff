"""Wire contract and per-world total ordering.

Frames are UTF-8 JSON, one message per frame, discriminated by "t".
Mutating commands carry a client-unique "op" nonce; the sequencer applies
them exactly once, assigns a gapless per-world sequence number, and
remembers recent outcomes so resends are answered without re-applying.
Cursor updates are presence data: unsequenced, latest-wins, coalesced.
"""

from __future__ import annotations

import json
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from typing import Optional, Union

from . import world as w
from .anchor import MarkerObservation, Pose, gate_access
from .placement import Ray
from .storage import StorageFailure

RETENTION = 10_000  # events kept for catch-up before falling back to snapshots
DEDUP_WINDOW = 1_024  # remembered op outcomes per (world, user)

REASON_OCCUPIED = "occupied"
REASON_NOT_FOUND = "not_found"
REASON_GATED = "gated"
REASON_MALFORMED = "malformed"
REASON_STORAGE = "storage"  # world went read-only after an append failure


class MalformedMessage(Exception):
    def __init__(self, position: int, detail: str):
        super().__init__(f"malformed message at {position}: {detail}")
        self.position = position
        self.detail = detail


class FutureSeqError(Exception):
    pass


# --- client messages ---------------------------------------------------------


@dataclass(frozen=True)
class Hello:
    user: Optional[str] = None  # fresh installs send none and get one minted


@dataclass(frozen=True)
class JoinWorld:
    world_id: str
    after_seq: Optional[int] = None  # reconnect catch-up: deliver events after this


@dataclass(frozen=True)
class AddBlock:
    op_id: int
    pos: w.CellPos
    size: w.SizeClass
    color: w.Color


@dataclass(frozen=True)
class DeleteBlock:
    op_id: int
    block_id: int


@dataclass(frozen=True)
class Undo:
    op_id: int


@dataclass(frozen=True)
class CursorUpdate:
    ray: Ray
    size: w.SizeClass
    color: w.Color


@dataclass(frozen=True)
class MarkerObserved:
    marker_id: str
    pose: list[float]  # 13 numbers: rotation row-major, translation, scale
    observed_at: int


@dataclass(frozen=True)
class Leave:
    pass


MUTATING = (AddBlock, DeleteBlock, Undo)


# --- server messages ---------------------------------------------------------


@dataclass(frozen=True)
class Welcome:
    user: str
    worlds: list[dict]


@dataclass(frozen=True)
class SnapshotMsg:
    world_id: str
    seq: int
    blocks: list[dict]
    users: list[str]
    adds: int = 0  # cumulative adds, the info-panel number


@dataclass(frozen=True)
class EventMsg:
    event: w.Event


@dataclass(frozen=True)
class PresenceMsg:
    world_id: str
    users: list[str]
    cursors: list[dict]


@dataclass(frozen=True)
class Reject:
    op_id: Optional[int]
    reason: str


ClientMsg = Union[Hello, JoinWorld, AddBlock, DeleteBlock, Undo, CursorUpdate, MarkerObserved, Leave]
ServerMsg = Union[Welcome, SnapshotMsg, EventMsg, PresenceMsg, Reject]


# --- codec -------------------------------------------------------------------


def encode(msg) -> bytes:
    return json.dumps(_to_wire(msg), separators=(",", ":")).encode("utf-8")


def _to_wire(msg) -> dict:
    if isinstance(msg, Hello):
        d = {"t": "Hello"}
        if msg.user is not None:
            d["user"] = msg.user
        return d
    if isinstance(msg, JoinWorld):
        d = {"t": "JoinWorld", "world": msg.world_id}
        if msg.after_seq is not None:
            d["after"] = msg.after_seq
        return d
    if isinstance(msg, AddBlock):
        return {
            "t": "AddBlock",
            "op": msg.op_id,
            "pos": list(msg.pos),
            "size": msg.size.value,
            "rgb": list(msg.color),
        }
    if isinstance(msg, DeleteBlock):
        return {"t": "DeleteBlock", "op": msg.op_id, "id": msg.block_id}
    if isinstance(msg, Undo):
        return {"t": "Undo", "op": msg.op_id}
    if isinstance(msg, CursorUpdate):
        return {
            "t": "CursorUpdate",
            "origin": list(msg.ray.origin),
            "dir": list(msg.ray.direction),
            "size": msg.size.value,
            "rgb": list(msg.color),
        }
    if isinstance(msg, MarkerObserved):
        return {"t": "MarkerObserved", "marker": msg.marker_id, "pose": list(msg.pose), "at": msg.observed_at}
    if isinstance(msg, Leave):
        return {"t": "Leave"}
    if isinstance(msg, Welcome):
        return {"t": "Welcome", "user": msg.user, "worlds": msg.worlds}
    if isinstance(msg, SnapshotMsg):
        return {
            "t": "Snapshot",
            "world": msg.world_id,
            "seq": msg.seq,
            "blocks": msg.blocks,
            "users": msg.users,
            "adds": msg.adds,
        }
    if isinstance(msg, EventMsg):
        e = msg.event
        return {"t": "Event", "seq": e.seq, "origin": e.origin, "time": e.time, "payload": e.payload}
    if isinstance(msg, PresenceMsg):
        return {"t": "Presence", "world": msg.world_id, "users": msg.users, "cursors": msg.cursors}
    if isinstance(msg, Reject):
        return {"t": "Reject", "op": msg.op_id, "reason": msg.reason}
    raise TypeError(f"cannot encode {type(msg).__name__}")


def decode(data):
    """Parse one frame. Raises MalformedMessage with a position and detail."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise MalformedMessage(e.pos, e.msg) from None
    if not isinstance(obj, dict):
        raise MalformedMessage(0, "frame is not an object")
    tag = obj.get("t")
    decoder = _DECODERS.get(tag)
    if decoder is None:
        raise MalformedMessage(0, f"unknown variant {tag!r}")
    try:
        return decoder(obj)
    except MalformedMessage:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise MalformedMessage(0, f"{tag}: {e}") from None


def _int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"expected integer, got {v!r}")
    return v


def _cellpos(v) -> w.CellPos:
    if not isinstance(v, list) or len(v) != 3:
        raise ValueError(f"pos must be [x,y,z], got {v!r}")
    return w.CellPos(*(_int(c) for c in v))


def _color(v) -> w.Color:
    if not isinstance(v, list) or len(v) != 3:
        raise ValueError(f"rgb must be [r,g,b], got {v!r}")
    return w.Color(*(_int(c) for c in v)).validate()


def _vec3(v) -> tuple[float, float, float]:
    if not isinstance(v, list) or len(v) != 3:
        raise ValueError(f"expected 3-vector, got {v!r}")
    return tuple(float(c) for c in v)


_DECODERS = {
    "Hello": lambda o: Hello(user=o.get("user")),
    "JoinWorld": lambda o: JoinWorld(world_id=str(o["world"]), after_seq=_int(o["after"]) if "after" in o else None),
    "AddBlock": lambda o: AddBlock(
        op_id=_int(o["op"]), pos=_cellpos(o["pos"]), size=w.SizeClass(o["size"]), color=_color(o["rgb"])
    ),
    "DeleteBlock": lambda o: DeleteBlock(op_id=_int(o["op"]), block_id=_int(o["id"])),
    "Undo": lambda o: Undo(op_id=_int(o["op"])),
    "CursorUpdate": lambda o: CursorUpdate(
        ray=Ray(_vec3(o["origin"]), _vec3(o["dir"])), size=w.SizeClass(o["size"]), color=_color(o["rgb"])
    ),
    "MarkerObserved": lambda o: MarkerObserved(
        marker_id=str(o["marker"]),
        pose=Pose.from_params(o["pose"]).to_params(),
        observed_at=_int(o["at"]),
    ),
    "Leave": lambda o: Leave(),
    "Welcome": lambda o: Welcome(user=str(o["user"]), worlds=list(o["worlds"])),
    "Snapshot": lambda o: SnapshotMsg(
        world_id=str(o["world"]),
        seq=_int(o["seq"]),
        blocks=list(o["blocks"]),
        users=list(o["users"]),
        adds=_int(o["adds"]) if "adds" in o else 0,
    ),
    "Event": lambda o: EventMsg(
        event=w.Event(seq=_int(o["seq"]), time=_int(o["time"]), origin=str(o["origin"]), payload=dict(o["payload"]))
    ),
    "Presence": lambda o: PresenceMsg(world_id=str(o["world"]), users=list(o["users"]), cursors=list(o["cursors"])),
    "Reject": lambda o: Reject(op_id=o["op"], reason=str(o["reason"])),
}


# --- sequencer ---------------------------------------------------------------


class Sequencer:
    """Single-writer authority for one world.

    Owns the state machine, the retained event ring, dedup memory, the
    append-before-ack persistence hook, and ephemeral cursors. Callers fan
    out the returned events; per-client delivery must preserve seq order.
    """

    def __init__(
        self,
        state: w.WorldState,
        log=None,
        freshness_window_ms: int = 120_000,
        retention: int = RETENTION,
    ):
        self.state = state
        self.log = log
        self.freshness_window_ms = freshness_window_ms
        self.events: deque[w.Event] = deque(maxlen=retention)
        self.dedup: dict[str, OrderedDict[int, ServerMsg]] = {}
        self.cursors: dict[str, dict] = {}
        self.cursors_dirty = False
        self.read_only = False

    # -- command path

    def submit(self, cmd, origin: str, now: int):
        """Apply one mutating command; returns EventMsg (broadcast to all
        joined clients) or Reject (origin only). Raises StorageFailure when
        the append fails; the world is then read-only."""
        if not isinstance(cmd, MUTATING):
            raise TypeError(f"submit() takes mutating commands, got {type(cmd).__name__}")
        if self.read_only:
            return Reject(cmd.op_id, REASON_STORAGE)
        cached = self._dedup_get(origin, cmd.op_id)
        if cached is not None:
            return cached
        if origin not in self.state.presence:
            return Reject(cmd.op_id, REASON_MALFORMED)
        if self.state.location_dependent:
            decision = gate_access(self.state, self._observation(origin), now, self.freshness_window_ms)
            if not decision:
                return self._remember(origin, cmd.op_id, Reject(cmd.op_id, REASON_GATED))
        try:
            payload = self._apply(cmd, origin, now)
        except w.OccupiedError:
            return self._remember(origin, cmd.op_id, Reject(cmd.op_id, REASON_OCCUPIED))
        except w.NotFoundError:
            return self._remember(origin, cmd.op_id, Reject(cmd.op_id, REASON_NOT_FOUND))
        except w.OutOfBoundsError:
            return self._remember(origin, cmd.op_id, Reject(cmd.op_id, REASON_MALFORMED))
        return self._seal(origin, now, payload, op_id=cmd.op_id)

    def _apply(self, cmd, origin: str, now: int) -> dict:
        if isinstance(cmd, AddBlock):
            block = w.apply_add(self.state, cmd.pos, cmd.size, cmd.color, origin, now)
            return {"k": "add", "block": w.block_to_dict(block), "op": cmd.op_id}
        if isinstance(cmd, DeleteBlock):
            rec = w.apply_delete(self.state, cmd.block_id, origin)
            return {
                "k": "del",
                "id": rec.block_id,
                "by": origin,
                "owner": rec.owner,
                "other": rec.was_by_other,
                "op": cmd.op_id,
            }
        rec = w.apply_undo(self.state, origin)
        return {"k": "undo", "user": origin, "removed": rec, "op": cmd.op_id}

    def _seal(self, origin: str, now: int, payload: dict, op_id: Optional[int] = None):
        """Append-before-ack: build the event, persist it, then retain it."""
        event = w.Event(seq=self.state.last_seq, time=now, origin=origin, payload=payload)
        if self.log is not None:
            try:
                self.log.append(event, self.state, self.dedup_export)
            except Exception as e:
                self.read_only = True
                raise StorageFailure(str(e)) from e
        self.events.append(event)
        msg = EventMsg(event)
        if op_id is not None:
            self._remember(origin, op_id, msg)
        return msg

    # -- membership / presence

    def join(self, user: str, now: int, after_seq: Optional[int] = None):
        """Returns (msgs for the joining client, optional join EventMsg to
        broadcast). A join while already present is pure catch-up."""
        broadcast = None
        if user not in self.state.presence:
            w.apply_join(self.state, user)
            broadcast = self._seal(user, now, {"k": "join", "user": user})
        if after_seq is None:
            msgs = [self.snapshot_msg()]
        else:
            caught = self.catch_up(after_seq)
            msgs = caught if isinstance(caught, list) else [caught]
            msgs = [EventMsg(e) if isinstance(e, w.Event) else e for e in msgs]
        return msgs, broadcast

    def leave(self, user: str, now: int):
        if user not in self.state.presence:
            return None
        w.apply_leave(self.state, user)
        self.cursors.pop(user, None)
        self.cursors_dirty = True
        return self._seal(user, now, {"k": "leave", "user": user})

    def observe_marker(self, user: str, cmd: MarkerObserved, now: int):
        if user not in self.state.presence:
            return Reject(None, REASON_MALFORMED)
        w.apply_marker(self.state, user, cmd.marker_id, cmd.pose, cmd.observed_at)
        return self._seal(
            user, now, {"k": "marker", "user": user, "marker": cmd.marker_id, "pose": list(cmd.pose), "at": cmd.observed_at}
        )

    def cursor_update(self, user: str, cmd: CursorUpdate) -> None:
        if user not in self.state.presence:
            return
        self.cursors[user] = {
            "user": user,
            "origin": list(cmd.ray.origin),
            "dir": list(cmd.ray.direction),
            "size": cmd.size.value,
            "rgb": list(cmd.color),
        }
        self.cursors_dirty = True

    # -- reads

    def catch_up(self, after_seq: int):
        """Events in (after_seq, current], or a full snapshot when the span
        has aged out of retention."""
        if after_seq > self.state.last_seq:
            raise FutureSeqError(f"after_seq {after_seq} is beyond {self.state.last_seq}")
        if after_seq == self.state.last_seq:
            return []
        if self.events and self.events[0].seq <= after_seq + 1:
            return [e for e in self.events if e.seq > after_seq]
        return self.snapshot_msg()

    def snapshot_msg(self) -> SnapshotMsg:
        s = self.state
        return SnapshotMsg(
            world_id=s.world_id,
            seq=s.last_seq,
            blocks=[w.block_to_dict(b) for b in s.blocks.values()],
            users=sorted(s.presence),
            adds=s.total_adds,
        )

    def presence_msg(self) -> PresenceMsg:
        self.cursors_dirty = False
        return PresenceMsg(
            world_id=self.state.world_id,
            users=sorted(self.state.presence),
            cursors=[self.cursors[u] for u in sorted(self.cursors)],
        )

    # -- dedup memory

    def _dedup_get(self, user: str, op_id: int):
        bucket = self.dedup.get(user)
        if bucket is None:
            return None
        return bucket.get(op_id)

    def _remember(self, user: str, op_id: int, outcome):
        bucket = self.dedup.setdefault(user, OrderedDict())
        bucket[op_id] = outcome
        while len(bucket) > DEDUP_WINDOW:
            bucket.popitem(last=False)
        return outcome

    def dedup_export(self) -> dict:
        """Accepted outcomes only; rejects are re-derived on resend after a restart."""
        out: dict[str, list] = {}
        for user, bucket in self.dedup.items():
            rows = [[op, msg.event.to_record()] for op, msg in bucket.items() if isinstance(msg, EventMsg)]
            if rows:
                out[user] = rows
        return out

    def dedup_import(self, data: dict) -> None:
        for user, rows in data.items():
            for op, record in rows:
                self._remember(user, int(op), EventMsg(w.Event.from_record(record)))

    def absorb_replayed(self, events: list[w.Event]) -> None:
        """Reload retention and dedup from events replayed at restore time."""
        for event in events:
            self.events.append(event)
            op = event.payload.get("op")
            if op is not None:
                self._remember(event.origin, op, EventMsg(event))

    def _observation(self, user: str) -> Optional[MarkerObservation]:
        d = self.state.markers.get(user)
        if d is None:
            return None
        return MarkerObservation(
            marker_id=d["marker"], world_from_marker=Pose.from_params(d["pose"]), observed_at=d["at"]
        )


# --- client-side replica ------------------------------------------------------


class Replica:
    """Minimal client state: block map, presence, last applied seq.

    Strictly ordered: events must arrive in seq order; stale events are
    ignored, gaps are reported so the caller can request catch-up.
    """

    APPLIED = "applied"
    STALE = "stale"
    GAP = "gap"

    def __init__(self):
        self.world_id: Optional[str] = None
        self.seq = 0
        self.blocks: dict[int, dict] = {}
        self.users: set[str] = set()

    def apply_snapshot(self, msg: SnapshotMsg) -> None:
        self.world_id = msg.world_id
        self.seq = msg.seq
        self.blocks = {b["id"]: b for b in msg.blocks}
        self.users = set(msg.users)

    def apply_event(self, event: w.Event) -> str:
        if event.seq <= self.seq:
            return self.STALE
        if event.seq != self.seq + 1:
            return self.GAP
        p = event.payload
        k = p["k"]
        if k == "add":
            self.blocks[p["block"]["id"]] = p["block"]
        elif k == "del":
            self.blocks.pop(p["id"], None)
        elif k == "undo":
            if p["removed"] is not None:
                self.blocks.pop(p["removed"], None)
        elif k == "join":
            self.users.add(p["user"])
        elif k == "leave":
            self.users.discard(p["user"])
        # marker events carry no block changes
        self.seq = event.seq
        return self.APPLIED

    def block_map(self) -> dict[int, dict]:
        return dict(self.blocks)
