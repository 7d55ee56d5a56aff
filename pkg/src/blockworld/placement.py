"""Creation geometry: ray casting against ground and blocks, snap rules,
press-and-hold line extension, and color picking.

Pure functions over immutable world snapshots; safe to call from anywhere.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .world import FINE_UNIT_M, CellPos, Color, SizeClass, WorldState

GROUND = "ground"
BLOCK_FACE = "block"

# Nearest-hit ties inside this margin prefer the block over the ground.
TIE_EPS_M = 1e-9


class InvalidCountError(ValueError):
    pass


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]  # unit length within 1e-9

    def __post_init__(self):
        n = math.sqrt(sum(c * c for c in self.direction))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"ray direction not unit length: |d|={n}")

    @classmethod
    def aimed(cls, origin, toward) -> "Ray":
        """Ray from `origin` through the point `toward` (normalizes for you)."""
        d = [t - o for o, t in zip(origin, toward)]
        n = math.sqrt(sum(c * c for c in d))
        if n == 0.0:
            raise ValueError("ray through its own origin")
        return cls(tuple(origin), tuple(c / n for c in d))


@dataclass(frozen=True)
class Hit:
    kind: str  # GROUND | BLOCK_FACE
    point: tuple[float, float, float]
    distance: float
    block_id: Optional[int] = None
    face_normal: Optional[tuple[int, int, int]] = None  # axis-aligned unit
    block_pos: Optional[CellPos] = None
    block_edge: Optional[int] = None


@dataclass(frozen=True)
class Cursor:
    """One user's live aiming state, streamed over the presence channel."""

    user: str
    ray: Ray
    size: SizeClass
    color: Color
    preview: Optional[CellPos] = None


def raycast(state: WorldState, ray: Ray) -> Optional[Hit]:
    """Nearest intersection among live-block boxes and the ground plane y=0.

    Ground counts only for downward rays started above it. Boxes whose
    entry point lies behind the origin (including origin-inside) are ignored.
    Ties within 1e-9 m prefer the block hit.
    """
    o = np.asarray(ray.origin, dtype=float)
    d = np.asarray(ray.direction, dtype=float)

    best_block = None  # (distance, block)
    if state.blocks:
        blocks = list(state.blocks.values())
        mins = np.array([b.pos for b in blocks], dtype=float) * FINE_UNIT_M
        maxs = mins + np.array([[b.size.edge] * 3 for b in blocks], dtype=float) * FINE_UNIT_M
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (mins - o) / d
            t2 = (maxs - o) / d
        # fmin/fmax drop the NaNs produced by 0/0 on slab boundaries
        t_near = np.fmin(t1, t2)
        t_far = np.fmax(t1, t2)
        t_enter = np.max(t_near, axis=1)
        t_exit = np.min(t_far, axis=1)
        ok = (t_enter <= t_exit) & (t_enter >= 0.0)
        if ok.any():
            idx = int(np.argmin(np.where(ok, t_enter, np.inf)))
            t = float(t_enter[idx])
            axis = int(np.argmax(t_near[idx]))
            sign = -1 if d[axis] > 0 else 1
            normal = [0, 0, 0]
            normal[axis] = sign
            best_block = (t, blocks[idx], tuple(normal))

    t_ground = None
    if d[1] < 0.0 and o[1] > 0.0:
        t_ground = -o[1] / d[1]

    if best_block is not None and (t_ground is None or best_block[0] <= t_ground + TIE_EPS_M):
        t, block, normal = best_block
        point = tuple((o + t * d).tolist())
        return Hit(
            kind=BLOCK_FACE,
            point=point,
            distance=t,
            block_id=block.id,
            face_normal=normal,
            block_pos=block.pos,
            block_edge=block.size.edge,
        )
    if t_ground is not None:
        p = o + t_ground * d
        return Hit(kind=GROUND, point=(float(p[0]), 0.0, float(p[2])), distance=float(t_ground))
    return None


def _snap(coord_m: float, edge: int) -> int:
    """Fine coordinate of the edge-aligned cell containing a world coordinate."""
    return math.floor(coord_m / (edge * FINE_UNIT_M)) * edge


def place_from_hit(hit: Hit, size: SizeClass) -> CellPos:
    """Min corner for a new block of `size` implied by a raycast hit.

    Ground hits snap both lateral axes to the block's own edge; block-face
    hits sit flush against the face, lateral axes snapped the same way.
    Occupancy and bounds are checked later by apply_add, not here.
    """
    e = size.edge
    if hit.kind == GROUND:
        return CellPos(_snap(hit.point[0], e), 0, _snap(hit.point[2], e))
    assert hit.face_normal is not None and hit.block_pos is not None and hit.block_edge is not None
    axis = next(i for i, c in enumerate(hit.face_normal) if c != 0)
    coords = [0, 0, 0]
    for i in range(3):
        if i == axis:
            if hit.face_normal[axis] > 0:
                coords[i] = hit.block_pos[i] + hit.block_edge
            else:
                coords[i] = hit.block_pos[i] - e
        else:
            coords[i] = _snap(hit.point[i], e)
    return CellPos(*coords)


def line_extension(
    anchor: CellPos, face_normal: tuple[int, int, int], size: SizeClass, count: int
) -> list[CellPos]:
    """Positions for a press-and-hold run: a column off horizontal surfaces
    (normal +-y), a row off vertical ones. Caller adds them one by one and
    stops at the first collision."""
    if count < 1:
        raise InvalidCountError(f"count must be >= 1, got {count}")
    if sum(abs(c) for c in face_normal) != 1:
        raise ValueError(f"face normal must be axis-aligned unit, got {face_normal}")
    e = size.edge
    return [
        CellPos(*(a + i * e * n for a, n in zip(anchor, face_normal)))
        for i in range(count)
    ]


def pick_color(state: WorldState, ray: Ray) -> Optional[Color]:
    """Eyedropper: color of the block under the cursor; None on ground or miss."""
    hit = raycast(state, ray)
    if hit is None or hit.kind != BLOCK_FACE:
        return None
    return state.blocks[hit.block_id].color


_PALETTE: Optional[list[Color]] = None


def default_palette() -> list[Color]:
    """The committed 16-entry saturated palette used for default colors."""
    global _PALETTE
    if _PALETTE is None:
        text = resources.files("blockworld.fixtures").joinpath("palette.txt").read_text()
        palette = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            r, g, b = line.split()
            palette.append(Color(int(r), int(g), int(b)))
        _PALETTE = palette
    return _PALETTE


def random_default_color(seed: int) -> Color:
    """Deterministic palette pick; fresh clients get a random starting color."""
    return random.Random(seed).choice(default_palette())
