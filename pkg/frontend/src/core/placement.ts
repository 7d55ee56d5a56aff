// Client-side creation geometry: the same ray/snap rules the server enforces,
// applied against the local replica for previews and optimistic placement.

import { BlockDict, CellPos, Color, EDGE, FINE_UNIT_M, SizeLetter, Vec3 } from "./types.js";

export interface Hit {
  kind: "ground" | "block";
  point: Vec3;
  distance: number;
  blockId?: number;
  faceNormal?: Vec3;
  blockPos?: CellPos;
  blockEdge?: number;
}

const TIE_EPS_M = 1e-9;

/** Nearest hit among live block boxes and the ground plane y=0. Boxes entered
 * behind the origin (or enclosing it) are ignored; ties prefer the block. */
export function raycast(blocks: Iterable<BlockDict>, origin: Vec3, dir: Vec3): Hit | null {
  let best: { t: number; block: BlockDict; normal: Vec3 } | null = null;
  for (const block of blocks) {
    const lo = block.pos.map((c) => c * FINE_UNIT_M) as Vec3;
    const hi = lo.map((c) => c + EDGE[block.size] * FINE_UNIT_M) as Vec3;
    let tEnter = -Infinity;
    let tExit = Infinity;
    let axis = -1;
    let inside = true;
    for (let i = 0; i < 3; i++) {
      if (dir[i] === 0) {
        if (origin[i] < lo[i] || origin[i] > hi[i]) {
          inside = false;
          break;
        }
        continue;
      }
      const t1 = (lo[i] - origin[i]) / dir[i];
      const t2 = (hi[i] - origin[i]) / dir[i];
      const near = Math.min(t1, t2);
      const far = Math.max(t1, t2);
      if (near > tEnter) {
        tEnter = near;
        axis = i;
      }
      tExit = Math.min(tExit, far);
    }
    if (!inside || tEnter > tExit || tEnter < 0) continue;
    if (best === null || tEnter < best.t) {
      const normal: Vec3 = [0, 0, 0];
      normal[axis] = dir[axis] > 0 ? -1 : 1;
      best = { t: tEnter, block, normal };
    }
  }

  let tGround: number | null = null;
  if (dir[1] < 0 && origin[1] > 0) tGround = -origin[1] / dir[1];

  if (best !== null && (tGround === null || best.t <= tGround + TIE_EPS_M)) {
    const point = origin.map((c, i) => c + best!.t * dir[i]) as Vec3;
    return {
      kind: "block",
      point,
      distance: best.t,
      blockId: best.block.id,
      faceNormal: best.normal,
      blockPos: best.block.pos,
      blockEdge: EDGE[best.block.size],
    };
  }
  if (tGround !== null) {
    return {
      kind: "ground",
      point: [origin[0] + tGround * dir[0], 0, origin[2] + tGround * dir[2]],
      distance: tGround,
    };
  }
  return null;
}

function snap(coordM: number, edge: number): number {
  return Math.floor(coordM / (edge * FINE_UNIT_M)) * edge;
}

/** Min corner for a new block implied by a hit: edge-aligned cell on the
 * ground, or flush against the struck face. Occupancy is the server's call. */
export function placeFromHit(hit: Hit, size: SizeLetter): CellPos {
  const e = EDGE[size];
  if (hit.kind === "ground") {
    return [snap(hit.point[0], e), 0, snap(hit.point[2], e)];
  }
  const normal = hit.faceNormal!;
  const axis = normal.findIndex((c) => c !== 0);
  const out: CellPos = [0, 0, 0];
  for (let i = 0; i < 3; i++) {
    if (i === axis) {
      out[i] = normal[axis] > 0 ? hit.blockPos![i] + hit.blockEdge! : hit.blockPos![i] - e;
    } else {
      out[i] = snap(hit.point[i], e);
    }
  }
  return out;
}

/** Press-and-hold run: a column off horizontal faces, a row off vertical ones. */
export function lineExtension(anchor: CellPos, normal: Vec3, size: SizeLetter, count: number): CellPos[] {
  if (count < 1) throw new Error(`count must be >= 1, got ${count}`);
  const e = EDGE[size];
  const run: CellPos[] = [];
  for (let k = 0; k < count; k++) {
    run.push([anchor[0] + k * e * normal[0], anchor[1] + k * e * normal[1], anchor[2] + k * e * normal[2]]);
  }
  return run;
}

/** Eyedropper: exact stored color of the block under the cursor. */
export function pickColor(blocks: Map<number, BlockDict>, origin: Vec3, dir: Vec3): Color | null {
  const hit = raycast(blocks.values(), origin, dir);
  if (hit === null || hit.kind !== "block") return null;
  return blocks.get(hit.blockId!)!.rgb;
}

export function blockCells(pos: CellPos, size: SizeLetter): CellPos[] {
  const e = EDGE[size];
  const cells: CellPos[] = [];
  for (let dx = 0; dx < e; dx++)
    for (let dy = 0; dy < e; dy++)
      for (let dz = 0; dz < e; dz++) cells.push([pos[0] + dx, pos[1] + dy, pos[2] + dz]);
  return cells;
}
