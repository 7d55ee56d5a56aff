"""Event-log persistence: append-only NDJSON per world, JSON snapshots every
1,000 events, and deterministic restore (snapshot load + log replay).

Human-debuggable on purpose: every record is one JSON line you can grep.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import world as w

logger = logging.getLogger(__name__)

SNAPSHOT_EVERY = 1_000
_SNAPSHOT_RE = re.compile(r"snapshot-(\d{8})\.json$")


class StorageFailure(Exception):
    """Append failed; the world must go read-only."""


class CorruptLog(Exception):
    def __init__(self, seq: int, detail: str):
        super().__init__(f"log corrupt at seq {seq}: {detail}")
        self.seq = seq


class EventLog:
    """Append-before-ack log for one world."""

    def __init__(self, dirpath: Path, fsync: bool = False):
        self.dir = Path(dirpath)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.path = self.dir / "log.ndjson"
        self.fsync = fsync
        self._fh = open(self.path, "a", encoding="utf-8")

    def write_meta(self, state: w.WorldState) -> None:
        meta = {"world": state.world_id, "kind": state.kind, "marker": state.marker_id}
        (self.dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    def append(self, event: w.Event, state: w.WorldState, dedup_export: Optional[Callable[[], dict]] = None) -> None:
        """Durably append one record; snapshot the full state every 1,000 events."""
        try:
            self._fh.write(json.dumps(event.to_record(), separators=(",", ":")) + "\n")
            self._fh.flush()
            if self.fsync:
                os.fsync(self._fh.fileno())
        except Exception as e:
            raise StorageFailure(f"append failed: {e}") from e
        if event.seq % SNAPSHOT_EVERY == 0:
            self.write_snapshot(state, dedup_export() if dedup_export else {})

    def write_snapshot(self, state: w.WorldState, dedup: dict) -> None:
        path = self.dir / f"snapshot-{state.last_seq:08d}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"state": state.to_snapshot(), "dedup": dedup}), encoding="utf-8")
        tmp.replace(path)

    def close(self) -> None:
        self._fh.close()

    def snapshot_files(self) -> list[Path]:
        return sorted(p for p in self.dir.iterdir() if _SNAPSHOT_RE.search(p.name))


@dataclass
class RestoreResult:
    state: w.WorldState
    events: list[w.Event] = field(default_factory=list)  # replayed tail, for retention/dedup
    dedup: dict = field(default_factory=dict)
    truncated_at: Optional[int] = None  # seq of the first dropped record, if any


def replay_event(state: w.WorldState, record: dict) -> w.Event:
    """Re-apply one logged record through the state machine; raises CorruptLog
    when the replay disagrees with what was recorded."""
    seq, time, origin, p = record["seq"], record["time"], record["origin"], record["payload"]
    kind = p["k"]
    try:
        if kind == "add":
            b = p["block"]
            block = w.apply_add(
                state, w.CellPos(*b["pos"]), w.SizeClass(b["size"]), w.Color(*b["rgb"]), b["owner"], time
            )
            if block.id != b["id"]:
                raise CorruptLog(seq, f"replayed block id {block.id} != recorded {b['id']}")
        elif kind == "del":
            w.apply_delete(state, p["id"], p["by"])
        elif kind == "undo":
            removed = w.apply_undo(state, p["user"])
            if removed != p["removed"]:
                raise CorruptLog(seq, f"replayed undo removed {removed} != recorded {p['removed']}")
        elif kind == "join":
            w.apply_join(state, p["user"])
        elif kind == "leave":
            w.apply_leave(state, p["user"])
        elif kind == "marker":
            w.apply_marker(state, p["user"], p["marker"], p["pose"], p["at"])
        else:
            raise CorruptLog(seq, f"unknown event kind {kind!r}")
    except w.WorldError as e:
        raise CorruptLog(seq, f"replay failed: {e}") from e
    if state.last_seq != seq:
        raise CorruptLog(seq, f"replay produced seq {state.last_seq}")
    return w.Event(seq=seq, time=time, origin=origin, payload=p)


def restore(dirpath: Path, truncate: bool = True) -> RestoreResult:
    """Rebuild a world from its latest snapshot plus the log tail.

    A torn or inconsistent record ends the replay: everything after it is
    dropped (and physically truncated unless `truncate=False`), with a warning.
    """
    dirpath = Path(dirpath)
    meta = json.loads((dirpath / "meta.json").read_text(encoding="utf-8"))
    snapshots = sorted(p for p in dirpath.iterdir() if _SNAPSHOT_RE.search(p.name))
    dedup: dict = {}
    if snapshots:
        doc = json.loads(snapshots[-1].read_text(encoding="utf-8"))
        state = w.WorldState.from_snapshot(doc["state"])
        dedup = doc.get("dedup", {})
    else:
        state = w.WorldState(world_id=meta["world"], kind=meta["kind"], marker_id=meta.get("marker"))

    result = RestoreResult(state=state, dedup=dedup)
    log_path = dirpath / "log.ndjson"
    if not log_path.exists():
        return result

    good_offset = 0
    with open(log_path, "rb") as fh:
        while True:
            line_start = fh.tell()
            raw = fh.readline()
            if not raw:
                break
            if not raw.endswith(b"\n"):
                logger.warning("%s: torn final record dropped", log_path)
                break
            try:
                record = json.loads(raw)
                seq = record["seq"]
                if seq <= state.last_seq:
                    good_offset = fh.tell()
                    continue  # covered by the snapshot
                if seq != state.last_seq + 1:
                    raise CorruptLog(seq, f"gap after seq {state.last_seq}")
                result.events.append(replay_event(state, record))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                logger.warning("%s: unreadable record at offset %d dropped (%s)", log_path, line_start, e)
                result.truncated_at = state.last_seq + 1
                break
            except CorruptLog as e:
                logger.warning("%s: %s; truncating", log_path, e)
                result.truncated_at = e.seq
                break
            good_offset = fh.tell()

    if truncate and log_path.stat().st_size > good_offset:
        with open(log_path, "r+b") as fh:
            fh.truncate(good_offset)
    return result


def read_log(path: Path) -> list[dict]:
    """Load an NDJSON export; tolerant of a torn final line."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                logger.warning("%s: skipping unreadable line", path)
                break
    return records
