"""World hosting: shared worlds from server config, personal worlds minted
lazily per user, restore-on-open, and the Welcome handshake."""

from __future__ import annotations

import json
import logging
import secrets
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import world as w
from .protocol import Hello, Sequencer, Welcome
from .storage import EventLog, restore

logger = logging.getLogger(__name__)


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class SharedWorldConfig:
    id: str
    marker_id: Optional[str] = None
    seed_starter: bool = False
    freshness_window_ms: int = 120_000

    @classmethod
    def from_dict(cls, d: dict) -> "SharedWorldConfig":
        return cls(
            id=d["id"],
            marker_id=d.get("marker"),
            seed_starter=bool(d.get("seed_starter", False)),
            freshness_window_ms=int(d.get("freshness_window_ms", 120_000)),
        )


def load_config(path) -> list[SharedWorldConfig]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [SharedWorldConfig.from_dict(d) for d in doc.get("worlds", [])]


DEFAULT_SHARED = [SharedWorldConfig(id="ourworld", seed_starter=True)]


class WorldRegistry:
    """All hosted worlds in this process, keyed by world id.

    Personal world ids derive from the user id, so a returning client always
    lands in the same world without a separate mapping table.
    """

    def __init__(
        self,
        data_dir,
        shared: Optional[list[SharedWorldConfig]] = None,
        clock: Callable[[], int] = now_ms,
        fsync: bool = False,
    ):
        self.data_dir = Path(data_dir)
        self.clock = clock
        self.fsync = fsync
        self.hosts: dict[str, Sequencer] = {}
        self.shared = list(DEFAULT_SHARED if shared is None else shared)
        for config in self.shared:
            self._open(config.id, kind="shared", marker_id=config.marker_id,
                       seed_starter=config.seed_starter, freshness=config.freshness_window_ms)

    def _world_dir(self, world_id: str) -> Path:
        return self.data_dir / "worlds" / world_id

    def _open(self, world_id: str, kind: str, marker_id: Optional[str],
              seed_starter: bool = False, freshness: int = 120_000) -> Sequencer:
        dirpath = self._world_dir(world_id)
        if (dirpath / "meta.json").exists():
            result = restore(dirpath)
            log = EventLog(dirpath, fsync=self.fsync)
            host = Sequencer(result.state, log, freshness_window_ms=freshness)
            host.dedup_import(result.dedup)
            host.absorb_replayed(result.events)
            # nobody has a live connection right after a restart: close any
            # presence the previous process never got to close
            for user in sorted(result.state.presence):
                host.leave(user, self.clock())
        else:
            state = w.WorldState(world_id=world_id, kind=kind, marker_id=marker_id)
            log = EventLog(dirpath, fsync=self.fsync)
            log.write_meta(state)
            host = Sequencer(state, log, freshness_window_ms=freshness)
        if seed_starter and kind == "shared" and not host.state.blocks:
            now = self.clock()
            for event in w.seed_starter_structure(host.state, now):
                log.append(event, host.state, host.dedup_export)
                host.events.append(event)
        self.hosts[world_id] = host
        return host

    # -- user handling

    @staticmethod
    def personal_world_id(user: str) -> str:
        return f"my-{user[:16]}"

    def ensure_personal(self, user: str) -> Sequencer:
        world_id = self.personal_world_id(user)
        host = self.hosts.get(world_id)
        if host is None:
            host = self._open(world_id, kind="personal", marker_id=None)
        return host

    def handle_connect(self, hello: Hello) -> Welcome:
        """Mint an id for fresh clients, ensure their personal world exists,
        and list the joinable worlds with their location modes."""
        user = hello.user or secrets.token_hex(16)
        self.ensure_personal(user)
        worlds = [{"id": self.personal_world_id(user), "kind": "personal", "marker": None}]
        for config in self.shared:
            entry = {"id": config.id, "kind": "shared", "marker": config.marker_id}
            if config.marker_id is not None:
                entry["freshness_ms"] = config.freshness_window_ms
            worlds.append(entry)
        return Welcome(user=user, worlds=worlds)

    def get(self, world_id: str) -> Optional[Sequencer]:
        return self.hosts.get(world_id)

    def may_join(self, user: str, world_id: str) -> bool:
        """Personal worlds admit only their owner; shared worlds admit anyone."""
        host = self.hosts.get(world_id)
        if host is None:
            return False
        if host.state.kind == "personal":
            return world_id == self.personal_world_id(user)
        return True

    def close(self) -> None:
        for host in self.hosts.values():
            if host.log is not None:
                host.log.close()
