"""Deterministic multi-client harness on a simulated clock.

Scripted bots drive the real codec, sequencer, and event log through a lossy
in-memory network (latency, jitter, independent per-message drop, transport
blips). Every random draw comes from generators derived from the scenario
seed, so the same (scenario, seed) pair produces byte-identical logs.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import protocol as proto
from . import world as w
from .placement import Ray
from .storage import EventLog

RESEND_FLOOR_MS = 1_500
MAX_STEPS = 5_000_000  # hard stop against scheduling bugs


class ScenarioInvalid(Exception):
    pass


@dataclass
class NetworkSpec:
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    drop: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            latency_ms=float(d.get("latency_ms", 0)),
            jitter_ms=float(d.get("jitter_ms", 0)),
            drop=float(d.get("drop", 0)),
        )


@dataclass
class WorldSpec:
    id: str = "ourworld"
    kind: str = "shared"
    marker_id: Optional[str] = None
    seed_starter: bool = False
    freshness_window_ms: int = 120_000

    @classmethod
    def from_dict(cls, d: dict) -> "WorldSpec":
        return cls(
            id=d.get("id", "ourworld"),
            kind=d.get("kind", "shared"),
            marker_id=d.get("marker"),
            seed_starter=bool(d.get("seed_starter", False)),
            freshness_window_ms=int(d.get("freshness_window_ms", 120_000)),
        )


@dataclass
class SessionSpec:
    """One scripted join..leave span for one user."""

    user: str
    join_at: int
    leave_at: int
    behavior: dict
    interval_ms: int = 1_000
    start_after_ms: int = 1_000
    disconnects: list = field(default_factory=list)  # [[off_at, on_at], ...]
    observe_marker: Optional[str] = None  # send a marker observation after joining

    @classmethod
    def from_dict(cls, d: dict) -> "SessionSpec":
        return cls(
            user=d["user"],
            join_at=int(d["join_at"]),
            leave_at=int(d["leave_at"]),
            behavior=dict(d["behavior"]),
            interval_ms=int(d.get("interval_ms", 1_000)),
            start_after_ms=int(d.get("start_after_ms", 1_000)),
            disconnects=[list(map(int, pair)) for pair in d.get("disconnects", [])],
            observe_marker=d.get("observe_marker"),
        )


@dataclass
class Scenario:
    name: str
    seed: int
    duration_ms: int
    world: WorldSpec
    network: NetworkSpec
    bots: list[SessionSpec]
    mode: str = "async"  # colocated-sync | remote-sync | async (label only)
    expected_report: Optional[dict] = None

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        scenario = cls(
            name=d.get("name", "scenario"),
            seed=int(d.get("seed", 0)),
            duration_ms=int(d["duration_ms"]),
            world=WorldSpec.from_dict(d.get("world", {})),
            network=NetworkSpec.from_dict(d.get("network", {})),
            bots=[SessionSpec.from_dict(b) for b in d["bots"]],
            mode=d.get("mode", "async"),
            expected_report=d.get("expected_report"),
        )
        scenario.validate()
        return scenario

    @classmethod
    def from_file(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def validate(self) -> None:
        if self.duration_ms <= 0:
            raise ScenarioInvalid("duration must be positive")
        if not 0 <= self.network.drop < 1:
            raise ScenarioInvalid(f"drop fraction {self.network.drop} out of [0, 1)")
        spans: dict[str, list] = {}
        for b in self.bots:
            if not 0 <= b.join_at < b.leave_at <= self.duration_ms:
                raise ScenarioInvalid(
                    f"schedule [{b.join_at}, {b.leave_at}] for {b.user} outside duration {self.duration_ms}"
                )
            for off, on in b.disconnects:
                if not b.join_at <= off < on <= b.leave_at:
                    raise ScenarioInvalid(f"disconnect window [{off}, {on}] outside {b.user}'s session")
            spans.setdefault(b.user, []).append((b.join_at, b.leave_at))
        for user, windows in spans.items():
            windows.sort()
            for (a0, a1), (b0, _) in zip(windows, windows[1:]):
                if b0 < a1:
                    raise ScenarioInvalid(f"overlapping sessions for {user}")


# --- behaviors ----------------------------------------------------------------


class Behavior:
    def next_command(self, client: "SimClient", now: int):
        raise NotImplementedError


class BuildTower(Behavior):
    """Adds `height` blocks straight up from a base cell, one per tick."""

    def __init__(self, spec: dict, rng: random.Random):
        self.base = w.CellPos(*spec["base"])
        self.height = int(spec["height"])
        self.size = w.SizeClass(spec.get("size", "S"))
        self.color = w.Color(*spec.get("rgb", [255, 96, 0]))
        self.k = 0

    def next_command(self, client, now):
        if self.k >= self.height:
            return None
        pos = w.CellPos(self.base.x, self.base.y + self.k * self.size.edge, self.base.z)
        self.k += 1
        return proto.AddBlock(op_id=client.next_op(), pos=pos, size=self.size, color=self.color)


class BuildTable(Behavior):
    """Fills in the starter table's missing blocks, one attempt per tick."""

    def __init__(self, spec: dict, rng: random.Random):
        self.k = 0

    def next_command(self, client, now):
        if self.k >= len(w.STARTER_GAPS):
            return None
        pos, size, color = w.STARTER_GAPS[self.k]
        self.k += 1
        return proto.AddBlock(op_id=client.next_op(), pos=pos, size=size, color=color)


class FreeBuild(Behavior):
    """Random placements inside a region, skipping cells the replica knows
    are taken (collisions across bots can still happen and are fine)."""

    def __init__(self, spec: dict, rng: random.Random):
        self.count = int(spec["count"])
        self.lo = spec.get("region_min", [0, 0, 0])
        self.hi = spec.get("region_max", [20, 10, 20])
        self.size = w.SizeClass(spec.get("size", "S"))
        self.rng = rng
        self.k = 0

    def next_command(self, client, now):
        if self.k >= self.count:
            return None
        occupied = set()
        for b in client.replica.blocks.values():
            occupied.update(w.block_cells(w.CellPos(*b["pos"]), w.SizeClass(b["size"])))
        for _ in range(20):
            pos = w.CellPos(*(self.rng.randrange(lo, max(hi, lo + 1)) for lo, hi in zip(self.lo, self.hi)))
            if not any(c in occupied for c in w.block_cells(pos, self.size)):
                self.k += 1
                color = self.rng.choice(
                    [w.Color(255, 0, 0), w.Color(0, 159, 255), w.Color(128, 255, 0), w.Color(255, 0, 191)]
                )
                return proto.AddBlock(op_id=client.next_op(), pos=pos, size=self.size, color=color)
        return None


class Vandal(Behavior):
    """Deletes other users' blocks until the budget is spent."""

    def __init__(self, spec: dict, rng: random.Random):
        self.budget = int(spec["budget"])
        self.rng = rng
        self.victims: set[int] = set()

    def next_command(self, client, now):
        if self.budget <= 0:
            return None
        foreign = sorted(
            bid
            for bid, b in client.replica.blocks.items()
            if b["owner"] != client.user and bid not in self.victims
        )
        if not foreign:
            return None
        victim = self.rng.choice(foreign)
        self.victims.add(victim)
        self.budget -= 1
        cmd = proto.DeleteBlock(op_id=client.next_op(), block_id=victim)
        client.victim_owner[cmd.op_id] = client.replica.blocks[victim]["owner"]
        return cmd


class Lurker(Behavior):
    """Presence only: streams cursor updates and never mutates anything."""

    def __init__(self, spec: dict, rng: random.Random):
        self.rng = rng

    def next_command(self, client, now):
        origin = (self.rng.uniform(-1, 1), self.rng.uniform(0.5, 2.0), self.rng.uniform(-1, 1))
        yaw = self.rng.uniform(0, 2 * math.pi)
        pitch = self.rng.uniform(-1.2, -0.2)
        d = (math.cos(pitch) * math.cos(yaw), math.sin(pitch), math.cos(pitch) * math.sin(yaw))
        n = math.sqrt(sum(c * c for c in d))
        ray = Ray(origin, tuple(c / n for c in d))
        return proto.CursorUpdate(ray=ray, size=w.SizeClass.MEDIUM, color=w.Color(255, 191, 0))


_BEHAVIORS = {
    "build_tower": BuildTower,
    "build_table": BuildTable,
    "free_build": FreeBuild,
    "vandal": Vandal,
    "lurker": Lurker,
}


def make_behavior(spec: dict, rng: random.Random) -> Behavior:
    kind = spec.get("kind")
    if kind not in _BEHAVIORS:
        raise ScenarioInvalid(f"unknown behavior {kind!r}")
    return _BEHAVIORS[kind](spec, rng)


def bot_step(client: "SimClient", now: int):
    """Next command for a joined bot, or None when it has nothing to say."""
    return client.behavior.next_command(client, now)


# --- the simulation -----------------------------------------------------------


class SimClient:
    def __init__(self, sim: "Simulation", spec: SessionSpec, idx: int):
        self.sim = sim
        self.spec = spec
        self.idx = idx
        self.user = spec.user
        self.rng = random.Random(f"{sim.seed}:{spec.user}:{idx}")
        self.behavior = make_behavior(spec.behavior, self.rng)
        self.replica = proto.Replica()
        self.have_snapshot = False
        self.connected = False  # transport up
        self.session_active = False  # sent JoinWorld, not yet left
        self.epoch = 0
        self._ops = itertools.count(1)
        self.pending: dict[int, proto.ClientMsg] = {}
        self.victim_owner: dict[int, str] = {}
        self.leave_pending = False
        self.catchup_inflight = False
        self.buffered: dict[int, w.Event] = {}
        # ground-truth counters, maintained from this bot's own acks
        self.acked_adds = 0
        self.acked_deletes = 0
        self.acked_deletes_by_other = 0
        self.acked_undo_removals = 0
        self.rejects: list[tuple[int, str]] = []
        self.sent_commands = 0
        self.sent_mutations = 0
        self.marker_sent = False

    def next_op(self) -> int:
        # unique per client and stable across runs: high bits carry the entry index
        return (self.idx << 32) | next(self._ops)

    # -- lifecycle, driven by the scheduler

    def connect(self, now: int) -> None:
        self.connected = True
        self.send(proto.Hello(user=self.user))
        self.sim.schedule(now + self.sim.resend_ms, self.ensure_joined)

    def ensure_joined(self, now: int) -> None:
        """Bootstrap retry: Hello and JoinWorld frames can drop like any other."""
        if self.leave_pending or (not self.session_active and now >= self.spec.leave_at):
            return
        if not self.session_active:
            self.send(proto.Hello(user=self.user))
        elif not self.have_snapshot:
            self.send(proto.JoinWorld(world_id=self.sim.scenario.world.id))
        else:
            return
        self.sim.schedule(now + self.sim.resend_ms, self.ensure_joined)

    def on_welcome(self, msg: proto.Welcome) -> None:
        if self.session_active and self.have_snapshot:
            return  # duplicate Welcome from a bootstrap retry
        if not self.session_active and self.sim.now >= self.spec.leave_at:
            return  # session window already over; stay out
        self.session_active = True
        self.send(proto.JoinWorld(world_id=self.sim.scenario.world.id))

    def tick(self, now: int) -> None:
        if now >= self.spec.leave_at:
            return
        if self.session_active and self.have_snapshot:
            cmd = bot_step(self, now)
            if cmd is not None:
                self.send_command(cmd, now)
        self.sim.schedule(now + self.spec.interval_ms, self.tick)

    def start_leave(self, now: int) -> None:
        if not self.session_active:
            return
        self.leave_pending = True
        self.send(proto.Leave())
        self.sim.schedule(now + self.sim.resend_ms, self.retry_leave)

    def retry_leave(self, now: int) -> None:
        if not self.leave_pending:
            return
        self.send(proto.Leave())
        self.sim.schedule(now + self.sim.resend_ms, self.retry_leave)

    def transport_down(self, now: int) -> None:
        self.connected = False
        self.epoch += 1

    def transport_up(self, now: int) -> None:
        self.connected = True
        if self.session_active:
            self.request_catchup()

    def request_catchup(self) -> None:
        self.catchup_inflight = True
        self.send(proto.JoinWorld(world_id=self.sim.scenario.world.id, after_seq=self.replica.seq))

    # -- outgoing

    def send(self, msg) -> None:
        self.sim.client_send(self, msg)

    def send_command(self, cmd, now: int) -> None:
        self.sent_commands += 1
        if isinstance(cmd, proto.MUTATING):
            self.sent_mutations += 1
            self.pending[cmd.op_id] = cmd
            self.sim.schedule(now + self.sim.resend_ms, lambda t, op=cmd.op_id: self.retry(op, t))
        self.send(cmd)

    def retry(self, op_id: int, now: int) -> None:
        cmd = self.pending.get(op_id)
        if cmd is None:
            return
        self.send(cmd)
        self.sim.schedule(now + self.sim.resend_ms, lambda t, op=op_id: self.retry(op, t))

    # -- incoming

    def receive(self, msg) -> None:
        if isinstance(msg, proto.Welcome):
            self.on_welcome(msg)
        elif isinstance(msg, proto.SnapshotMsg):
            self.replica.apply_snapshot(msg)
            self.have_snapshot = True
            self.catchup_inflight = False
            self.buffered = {s: e for s, e in self.buffered.items() if s > self.replica.seq}
            self._drain()
            if self.spec.observe_marker and not self.marker_sent:
                self.marker_sent = True
                identity = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
                self.send(
                    proto.MarkerObserved(
                        marker_id=self.spec.observe_marker, pose=identity, observed_at=int(self.sim.now)
                    )
                )
        elif isinstance(msg, proto.EventMsg):
            self._on_event(msg.event)
        elif isinstance(msg, proto.Reject):
            if msg.op_id is None:
                self.rejects.append((None, msg.reason))
            elif msg.op_id in self.pending:
                # count once: duplicate rejects arrive when a resend raced the ack
                self.pending.pop(msg.op_id)
                self.rejects.append((msg.op_id, msg.reason))
        # Presence frames are informational; bots do not act on them.

    def _on_event(self, event: w.Event) -> None:
        p = event.payload
        if event.origin == self.user:
            op = p.get("op")
            if op is not None and op in self.pending:
                self.pending.pop(op)
                self._count_ack(p)
            if p["k"] == "leave" and self.leave_pending:
                self.leave_pending = False
                self.session_active = False
        status = self.replica.apply_event(event)
        if status == proto.Replica.APPLIED:
            self._drain()
        elif status == proto.Replica.GAP:
            self.buffered[event.seq] = event
            if not self.catchup_inflight:
                self.request_catchup()

    def _drain(self) -> None:
        while self.replica.seq + 1 in self.buffered:
            self.replica.apply_event(self.buffered.pop(self.replica.seq + 1))
        self.buffered = {s: e for s, e in self.buffered.items() if s > self.replica.seq}
        if not self.buffered:
            self.catchup_inflight = False

    def _count_ack(self, payload: dict) -> None:
        k = payload["k"]
        if k == "add":
            self.acked_adds += 1
        elif k == "del":
            self.acked_deletes += 1
            owner = self.victim_owner.get(payload["op"])
            if owner is not None and owner != self.user:
                self.acked_deletes_by_other += 1
        elif k == "undo" and payload["removed"] is not None:
            self.acked_undo_removals += 1

    # -- settle loop: after the schedule ends, keep requesting catch-up until
    # the replica matches the server (the harness peeks only to decide when to
    # stop asking; the data itself always travels the lossy wire).

    def settle(self, now: int) -> None:
        if not self.session_active or not self.connected:
            return
        if self.replica.seq >= self.sim.seq.state.last_seq and not self.pending and not self.buffered:
            return
        self.request_catchup()
        self.sim.schedule(now + self.sim.resend_ms, self.settle)


@dataclass
class RunResult:
    out_dir: Path
    log_paths: dict
    server_blocks: dict
    server_snapshot: dict
    replicas: list
    converged: list  # per still-joined client at quiescence
    rejects: list
    client_stats: list
    ground_truth: dict
    seed_events: int
    steps: int


class Simulation:
    def __init__(self, scenario: Scenario, seed: int, out_dir):
        self.scenario = scenario
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.net = scenario.network
        self.rng_net = random.Random(f"{seed}:net")
        self.now = 0
        self._counter = itertools.count()
        self.heap: list = []
        self.resend_ms = max(RESEND_FLOOR_MS, int(4 * (self.net.latency_ms + self.net.jitter_ms)))
        self.steps = 0

        ws = scenario.world
        state = w.WorldState(world_id=ws.id, kind=ws.kind, marker_id=ws.marker_id)
        self.log = EventLog(self.out_dir / ws.id)
        self.log.write_meta(state)
        self.seq = proto.Sequencer(state, self.log, freshness_window_ms=ws.freshness_window_ms)
        self.seed_events = 0
        if ws.seed_starter:
            for event in w.seed_starter_structure(state, 0):
                self.log.append(event, state, self.seq.dedup_export)
                self.seq.events.append(event)
                self.seed_events += 1

        self.clients = [SimClient(self, spec, i) for i, spec in enumerate(scenario.bots)]
        self._link_last: dict[tuple[int, str], float] = {}
        self._presence_flush_scheduled = False

        for client in self.clients:
            self.schedule(client.spec.join_at, client.connect)
            self.schedule(client.spec.join_at + client.spec.start_after_ms, client.tick)
            if client.spec.leave_at < scenario.duration_ms:
                self.schedule(client.spec.leave_at, client.start_leave)
            else:
                # stays to the end: converge via catch-up instead of leaving
                self.schedule(scenario.duration_ms, client.settle)
            for off, on in client.spec.disconnects:
                self.schedule(off, client.transport_down)
                self.schedule(on, client.transport_up)

    # -- scheduler

    def schedule(self, at, fn) -> None:
        heapq.heappush(self.heap, (at, next(self._counter), fn))

    def run(self) -> RunResult:
        while self.heap:
            at, _, fn = heapq.heappop(self.heap)
            self.now = at
            fn(at)
            self.steps += 1
            if self.steps > MAX_STEPS:
                raise RuntimeError("simulation exceeded step budget; scheduling bug?")
        return self._result()

    # -- transport (drop and delay both directions, FIFO per link direction)

    def _delay(self) -> float:
        jitter = self.rng_net.uniform(-self.net.jitter_ms, self.net.jitter_ms) if self.net.jitter_ms else 0.0
        return max(0.0, self.net.latency_ms + jitter)

    def _deliver_at(self, link: tuple[int, str]) -> float:
        at = max(self.now + self._delay(), self._link_last.get(link, 0.0))
        self._link_last[link] = at
        return at

    def client_send(self, client: SimClient, msg) -> None:
        if not client.connected:
            return
        data = proto.encode(msg)
        if self.rng_net.random() < self.net.drop:
            return
        at = self._deliver_at((client.idx, "up"))
        self.schedule(at, lambda t, c=client, d=data: self._server_receive(c, d, t))

    def server_send(self, client: SimClient, msg) -> None:
        if not client.connected:
            return
        data = proto.encode(msg)
        if self.rng_net.random() < self.net.drop:
            return
        at = self._deliver_at((client.idx, "down"))
        epoch = client.epoch
        self.schedule(at, lambda t, c=client, d=data, e=epoch: self._client_receive(c, d, e))

    def _client_receive(self, client: SimClient, data: bytes, epoch: int) -> None:
        if not client.connected or client.epoch != epoch:
            return
        client.receive(proto.decode(data))

    # -- server side

    def _joined_clients(self) -> list[SimClient]:
        return [c for c in self.clients if c.session_active and c.user in self.seq.state.presence]

    def _broadcast(self, msg) -> None:
        for c in self._joined_clients():
            self.server_send(c, msg)

    def _server_receive(self, client: SimClient, data: bytes, now: float) -> None:
        msg = proto.decode(data)
        now = int(now)
        if isinstance(msg, proto.Hello):
            worlds = [{"id": self.scenario.world.id, "kind": self.scenario.world.kind, "marker": self.scenario.world.marker_id}]
            self.server_send(client, proto.Welcome(user=client.user, worlds=worlds))
        elif isinstance(msg, proto.JoinWorld):
            if msg.world_id != self.scenario.world.id:
                self.server_send(client, proto.Reject(None, proto.REASON_MALFORMED))
                return
            msgs, join_event = self.seq.join(client.user, now, msg.after_seq)
            if join_event is not None:
                self._broadcast(join_event)
                self._schedule_presence_flush()
            for m in msgs:
                # the joiner may also get its join event via the broadcast;
                # replicas drop the stale copy by seq
                self.server_send(client, m)
        elif isinstance(msg, proto.MUTATING):
            outcome = self.seq.submit(msg, client.user, now)
            if isinstance(outcome, proto.EventMsg):
                self._broadcast(outcome)
            else:
                self.server_send(client, outcome)
        elif isinstance(msg, proto.CursorUpdate):
            self.seq.cursor_update(client.user, msg)
            self._schedule_presence_flush()
        elif isinstance(msg, proto.MarkerObserved):
            outcome = self.seq.observe_marker(client.user, msg, now)
            if isinstance(outcome, proto.EventMsg):
                self._broadcast(outcome)
            else:
                self.server_send(client, outcome)
        elif isinstance(msg, proto.Leave):
            event = self.seq.leave(client.user, now)
            if event is not None:
                self._broadcast(event)
                self.server_send(client, event)  # the leaver is no longer in the fan-out
                self._schedule_presence_flush()
            else:
                # duplicate leave (the ack was lost): resend the real logged event
                for e in reversed(self.seq.events):
                    if e.payload.get("k") == "leave" and e.payload.get("user") == client.user:
                        self.server_send(client, proto.EventMsg(e))
                        break

    def _schedule_presence_flush(self) -> None:
        # coalesce cursor/presence churn to at most 10 frames per second
        if self._presence_flush_scheduled:
            return
        self._presence_flush_scheduled = True
        self.schedule(self.now + 100, self._flush_presence)

    def _flush_presence(self, now) -> None:
        self._presence_flush_scheduled = False
        msg = self.seq.presence_msg()
        self._broadcast(msg)

    # -- results

    def _result(self) -> RunResult:
        server_blocks = {bid: w.block_to_dict(b) for bid, b in self.seq.state.blocks.items()}
        converged = []
        for c in self.clients:
            if c.session_active:
                converged.append(c.replica.block_map() == server_blocks)
        per_user_adds: dict[str, int] = {}
        for c in self.clients:
            per_user_adds[c.user] = per_user_adds.get(c.user, 0) + c.acked_adds

        sessions_with_blocks = [c for c in self.clients if c.acked_adds >= 1]
        durations = [c.spec.leave_at - c.spec.join_at for c in sessions_with_blocks]
        per_user_sessions: dict[str, int] = {}
        for c in self.clients:
            per_user_sessions[c.user] = per_user_sessions.get(c.user, 0) + 1

        truth = {
            "users": len(per_user_sessions),
            "user_sessions": len(self.clients),
            "users_with_gt1_session": sum(1 for n in per_user_sessions.values() if n > 1),
            "sessions_with_blocks": len(sessions_with_blocks),
            "blocks_added": sum(c.acked_adds for c in self.clients) + self.seed_events,
            "blocks_deleted": sum(c.acked_deletes + c.acked_undo_removals for c in self.clients),
            "deletion_by_others": sum(c.acked_deletes_by_other for c in self.clients),
            "avg_blocks_per_session": (
                sum(c.acked_adds for c in sessions_with_blocks) / len(sessions_with_blocks)
                if sessions_with_blocks
                else 0.0
            ),
            "avg_time_per_session_min": (sum(durations) / len(durations) / 60_000 if durations else 0.0),
            "per_user_adds": per_user_adds,
        }
        if self.scenario.expected_report:
            truth.update(self.scenario.expected_report)
        return RunResult(
            out_dir=self.out_dir,
            log_paths={self.scenario.world.id: self.log.path},
            server_blocks=server_blocks,
            server_snapshot=self.seq.state.to_snapshot(),
            replicas=[c.replica.block_map() for c in self.clients],
            converged=converged,
            rejects=[c.rejects for c in self.clients],
            client_stats=[
                {
                    "user": c.user,
                    "sent_mutations": c.sent_mutations,
                    "acked_adds": c.acked_adds,
                    "acked_deletes": c.acked_deletes,
                    "acked_deletes_by_other": c.acked_deletes_by_other,
                    "rejects": len(c.rejects),
                }
                for c in self.clients
            ],
            ground_truth=truth,
            seed_events=self.seed_events,
            steps=self.steps,
        )


def run_scenario(scenario: Scenario, seed: Optional[int] = None, out_dir=None) -> RunResult:
    """Execute a scenario to quiescence; emits NDJSON logs under out_dir."""
    import tempfile

    if seed is None:
        seed = scenario.seed
    if out_dir is None:
        out_dir = tempfile.mkdtemp(prefix="blockworld-sim-")
    sim = Simulation(scenario, seed, out_dir)
    try:
        return sim.run()
    finally:
        sim.log.close()
