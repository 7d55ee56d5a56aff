"""Single-world state machine: blocks, fine-cell occupancy, undo, presence, counters.

All geometry lives on an integer lattice of "fine" cells (0.02 m edge).
Block edges are 1, 2, or 4 fine units, so mixed sizes tile exactly and
collision is a set problem over integer cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterator, NamedTuple, Optional

FINE_UNIT_M = 0.02
HIGHLIGHT_MS = 1500
# Reserved owner for seeded starter content; never connects, never expires.
SYSTEM_USER = "00000000000000000000000000000000"


class WorldError(Exception):
    """Rule violation; state is never mutated when one of these raises."""


class OccupiedError(WorldError):
    pass


class OutOfBoundsError(WorldError):
    pass


class NotFoundError(WorldError):
    pass


class NotEmptyError(WorldError):
    pass


class NotSharedError(WorldError):
    pass


class SizeClass(Enum):
    SMALL = "S"
    MEDIUM = "M"
    LARGE = "L"

    @property
    def edge(self) -> int:
        """Edge length in fine units."""
        return _EDGES[self]


_EDGES = {SizeClass.SMALL: 1, SizeClass.MEDIUM: 2, SizeClass.LARGE: 4}


class CellPos(NamedTuple):
    x: int
    y: int
    z: int


class Color(NamedTuple):
    r: int
    g: int
    b: int

    def validate(self) -> "Color":
        for c in self:
            if not isinstance(c, int) or not 0 <= c <= 255:
                raise ValueError(f"color channel out of range: {self}")
        return self


class InfoCounts(NamedTuple):
    blocks_added: int
    users_online: int


class DeletionRecord(NamedTuple):
    block_id: int
    owner: str
    was_by_other: bool


@dataclass
class Block:
    id: int
    pos: CellPos
    size: SizeClass
    color: Color
    owner: str
    seq: int
    created_at: int

    def cells(self) -> Iterator[tuple[int, int, int]]:
        return block_cells(self.pos, self.size)


def block_cells(pos: CellPos, size: SizeClass) -> Iterator[tuple[int, int, int]]:
    """All fine cells covered by a block with its min corner at `pos`."""
    e = size.edge
    for dx in range(e):
        for dy in range(e):
            for dz in range(e):
                yield (pos[0] + dx, pos[1] + dy, pos[2] + dz)


def block_to_dict(block: Block) -> dict:
    return {
        "id": block.id,
        "pos": list(block.pos),
        "size": block.size.value,
        "rgb": list(block.color),
        "owner": block.owner,
        "seq": block.seq,
        "at": block.created_at,
    }


def block_from_dict(d: dict) -> Block:
    return Block(
        id=d["id"],
        pos=CellPos(*d["pos"]),
        size=SizeClass(d["size"]),
        color=Color(*d["rgb"]),
        owner=d["owner"],
        seq=d["seq"],
        created_at=d["at"],
    )


@dataclass
class Event:
    """One sequenced, persisted state transition."""

    seq: int
    time: int
    origin: str
    payload: dict

    def to_record(self) -> dict:
        return {"seq": self.seq, "time": self.time, "origin": self.origin, "payload": self.payload}

    @classmethod
    def from_record(cls, d: dict) -> "Event":
        return cls(seq=d["seq"], time=d["time"], origin=d["origin"], payload=d["payload"])


@dataclass
class WorldState:
    """Authoritative content of one world.

    Mutated by exactly one writer at a time (the per-world sequencer).
    `occupancy` is derived state: always the exact union of live blocks' cells.
    Cursor payloads are deliberately not here; they are ephemeral presence
    data outside the replayed core.
    """

    world_id: str
    kind: str = "shared"  # "personal" | "shared"
    marker_id: Optional[str] = None  # None = location-independent
    blocks: dict[int, Block] = field(default_factory=dict)
    occupancy: dict[tuple[int, int, int], int] = field(default_factory=dict)
    undo_stacks: dict[str, list[int]] = field(default_factory=dict)
    presence: set[str] = field(default_factory=set)
    total_adds: int = 0
    total_deletes: int = 0
    deletes_by_others: int = 0
    last_seq: int = 0
    next_block_id: int = 1
    # user -> latest marker observation {"marker", "pose", "at"} for this world
    markers: dict[str, dict] = field(default_factory=dict)

    @property
    def location_dependent(self) -> bool:
        return self.marker_id is not None

    def to_snapshot(self) -> dict:
        return {
            "world": self.world_id,
            "kind": self.kind,
            "marker": self.marker_id,
            "last_seq": self.last_seq,
            "next_block_id": self.next_block_id,
            "blocks": [block_to_dict(b) for b in self.blocks.values()],
            "undo": {u: list(s) for u, s in self.undo_stacks.items() if s},
            "presence": sorted(self.presence),
            "counters": {
                "adds": self.total_adds,
                "deletes": self.total_deletes,
                "by_others": self.deletes_by_others,
            },
            "markers": dict(self.markers),
        }

    @classmethod
    def from_snapshot(cls, d: dict) -> "WorldState":
        state = cls(world_id=d["world"], kind=d["kind"], marker_id=d.get("marker"))
        state.last_seq = d["last_seq"]
        state.next_block_id = d["next_block_id"]
        for bd in d["blocks"]:
            block = block_from_dict(bd)
            state.blocks[block.id] = block
            for cell in block.cells():
                state.occupancy[cell] = block.id
        state.undo_stacks = {u: list(s) for u, s in d.get("undo", {}).items()}
        state.presence = set(d.get("presence", []))
        c = d["counters"]
        state.total_adds = c["adds"]
        state.total_deletes = c["deletes"]
        state.deletes_by_others = c["by_others"]
        state.markers = dict(d.get("markers", {}))
        return state


def apply_add(
    state: WorldState,
    pos: CellPos,
    size: SizeClass,
    color: Color,
    owner: str,
    now: int,
) -> Block:
    """Insert a block. Raises OutOfBoundsError / OccupiedError, state untouched."""
    if pos[1] < 0:
        raise OutOfBoundsError(f"block base below ground: y={pos[1]}")
    cells = list(block_cells(pos, size))
    for cell in cells:
        if cell in state.occupancy:
            raise OccupiedError(f"cell {cell} already covered by block {state.occupancy[cell]}")
    block = Block(
        id=state.next_block_id,
        pos=CellPos(*pos),
        size=size,
        color=Color(*color),
        owner=owner,
        seq=state.last_seq + 1,
        created_at=now,
    )
    state.blocks[block.id] = block
    for cell in cells:
        state.occupancy[cell] = block.id
    state.undo_stacks.setdefault(owner, []).append(block.id)
    state.total_adds += 1
    state.next_block_id += 1
    state.last_seq = block.seq
    return block


def _remove_block(state: WorldState, block: Block) -> None:
    del state.blocks[block.id]
    for cell in block.cells():
        del state.occupancy[cell]


def apply_delete(state: WorldState, block_id: int, deleter: str) -> DeletionRecord:
    """Delete any live block. Dead undo-stack entries are left in place and
    skipped later by apply_undo."""
    block = state.blocks.get(block_id)
    if block is None:
        raise NotFoundError(f"no live block {block_id}")
    _remove_block(state, block)
    state.total_deletes += 1
    was_by_other = deleter != block.owner
    if was_by_other:
        state.deletes_by_others += 1
    state.last_seq += 1
    return DeletionRecord(block_id, block.owner, was_by_other)


def apply_undo(state: WorldState, user: str) -> Optional[int]:
    """Remove the user's most recent still-live block.

    Pops dead entries (blocks already deleted by anyone) without effect.
    Returns the removed block id, or None when the stack exhausts. Always
    consumes a sequence number so the outcome is part of the event order.
    """
    stack = state.undo_stacks.get(user, [])
    removed: Optional[int] = None
    while stack:
        block_id = stack.pop()
        block = state.blocks.get(block_id)
        if block is not None:
            _remove_block(state, block)
            state.total_deletes += 1
            removed = block_id
            break
    state.last_seq += 1
    return removed


def apply_join(state: WorldState, user: str) -> None:
    state.presence.add(user)
    state.last_seq += 1


def apply_leave(state: WorldState, user: str) -> None:
    state.presence.discard(user)
    state.last_seq += 1


def apply_marker(state: WorldState, user: str, marker_id: str, pose: list, observed_at: int) -> None:
    state.markers[user] = {"marker": marker_id, "pose": list(pose), "at": observed_at}
    state.last_seq += 1


def recent_highlight(block: Block, now: int) -> bool:
    """True while the block should render lightened (strictly under 1.5 s old)."""
    return now - block.created_at < HIGHLIGHT_MS


def info_counts(state: WorldState) -> InfoCounts:
    """Info-panel numbers: cumulative adds (survives deletion) and users online."""
    return InfoCounts(blocks_added=state.total_adds, users_online=len(state.presence))


def brute_force_occupancy(state: WorldState) -> dict[tuple[int, int, int], int]:
    """Independent occupancy reconstruction; raises on any overlapping pair."""
    cells: dict[tuple[int, int, int], int] = {}
    for block in state.blocks.values():
        for cell in block.cells():
            if cell in cells:
                raise AssertionError(f"blocks {cells[cell]} and {block.id} overlap at {cell}")
            cells[cell] = block.id
    return cells


# --- starter structure ------------------------------------------------------

# Positions a helper bot adds to complete the starter table (the blocks the
# template leaves out: one leg top, one tabletop block).
STARTER_GAPS: list[tuple[CellPos, SizeClass, Color]] = [
    (CellPos(8, 4, 4), SizeClass.MEDIUM, Color(139, 90, 43)),
    (CellPos(4, 6, 2), SizeClass.MEDIUM, Color(160, 110, 60)),
]


def load_starter_template() -> list[tuple[CellPos, SizeClass, Color]]:
    """Parse the committed starter-table fixture (one `x y z size r g b` per line)."""
    text = resources.files("blockworld.fixtures").joinpath("starter_table.txt").read_text()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        x, y, z, size, r, g, b = line.split()
        rows.append((CellPos(int(x), int(y), int(z)), SizeClass(size), Color(int(r), int(g), int(b))))
    return rows


def seed_starter_structure(state: WorldState, now: int) -> list[Event]:
    """Seed a fresh shared world with the incomplete starter table.

    Raises NotSharedError / NotEmptyError; on success returns the add events,
    already applied and sequenced, owned by the reserved system user.
    """
    if state.kind != "shared":
        raise NotSharedError(f"world {state.world_id} is {state.kind}")
    if state.blocks:
        raise NotEmptyError(f"world {state.world_id} already has {len(state.blocks)} blocks")
    events = []
    for pos, size, color in load_starter_template():
        block = apply_add(state, pos, size, color, SYSTEM_USER, now)
        events.append(
            Event(
                seq=block.seq,
                time=now,
                origin=SYSTEM_USER,
                payload={"k": "add", "block": block_to_dict(block)},
            )
        )
    return events
