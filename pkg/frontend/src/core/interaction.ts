// Input-to-protocol state machine: taps, press-and-hold runs, delete mode,
// the eyedropper, optimistic application, and rollback on Reject.

import { Hit, lineExtension, pickColor, placeFromHit, raycast } from "./placement.js";
import { ClientMsg, ServerMsg } from "./protocol.js";
import { Replica } from "./replica.js";
import { BlockDict, CellPos, Color, SizeLetter, Vec3 } from "./types.js";

export type Mode = "build" | "delete" | "eyedropper";

export const HOLD_THRESHOLD_MS = 400;
export const HOLD_REPEAT_MS = 250;

interface HoldRun {
  startedAt: number;
  anchor: CellPos;
  normal: Vec3;
  emitted: number;
  ops: Set<number>;
  stopped: boolean;
}

interface PendingAdd {
  kind: "add";
  block: { pos: CellPos; size: SizeLetter; rgb: Color; at: number };
}

interface PendingDelete {
  kind: "del";
  id: number;
}

export interface DrawBlock {
  id: number | null; // null for optimistic blocks awaiting their server id
  pos: CellPos;
  size: SizeLetter;
  rgb: Color;
  createdAt: number;
  pending: boolean;
}

export interface Reconciled {
  rolledBack: number[]; // ops whose optimistic effect was reverted
}

export class InteractionCore {
  mode: Mode = "build";
  size: SizeLetter = "M";
  color: Color;
  pending = new Map<number, PendingAdd | PendingDelete>();
  private hold: HoldRun | null = null;
  private nextOp: number;

  constructor(
    public replica: Replica,
    defaultColor: Color,
    opSeed = 1,
  ) {
    this.color = defaultColor;
    this.nextOp = opSeed;
  }

  mintOp(): number {
    return this.nextOp++;
  }

  /** Blocks the renderer should draw: authoritative state, minus blocks being
   * optimistically deleted, plus optimistic adds. */
  drawBlocks(now: number): DrawBlock[] {
    const hiddenIds = new Set<number>();
    for (const p of this.pending.values()) {
      if (p.kind === "del") hiddenIds.add(p.id);
    }
    const out: DrawBlock[] = [];
    for (const b of this.replica.blocks.values()) {
      if (!hiddenIds.has(b.id)) {
        out.push({ id: b.id, pos: b.pos, size: b.size, rgb: b.rgb, createdAt: b.at, pending: false });
      }
    }
    for (const p of this.pending.values()) {
      if (p.kind === "add") {
        out.push({ id: null, pos: p.block.pos, size: p.block.size, rgb: p.block.rgb, createdAt: p.block.at, pending: true });
      }
    }
    return out;
  }

  /** Blocks as the optimistic view sees them, for aiming while building. */
  private aimBlocks(): BlockDict[] {
    return this.drawBlocks(0).map((d, i) => ({
      id: d.id ?? -(i + 1),
      pos: d.pos,
      size: d.size,
      rgb: d.rgb,
      owner: "",
      seq: 0,
      at: d.createdAt,
    }));
  }

  aim(origin: Vec3, dir: Vec3): Hit | null {
    return raycast(this.aimBlocks(), origin, dir);
  }

  /** Preview cell for the crosshair and for peers' cursor rendering. */
  preview(origin: Vec3, dir: Vec3): CellPos | null {
    const hit = this.aim(origin, dir);
    return hit === null ? null : placeFromHit(hit, this.size);
  }

  pointerDown(origin: Vec3, dir: Vec3, now: number): void {
    if (this.mode !== "build") return; // only building repeats on hold
    const hit = this.aim(origin, dir);
    if (hit === null) return;
    const anchor = placeFromHit(hit, this.size);
    const normal: Vec3 = hit.kind === "ground" ? [0, 1, 0] : hit.faceNormal!;
    this.hold = { startedAt: now, anchor, normal, emitted: 0, ops: new Set(), stopped: false };
  }

  /** Drive the hold run; call regularly (each frame). Emits the k-th add at
   * threshold + k * cadence along the line extension. */
  tickHold(now: number): ClientMsg[] {
    const run = this.hold;
    if (run === null || run.stopped) return [];
    const msgs: ClientMsg[] = [];
    while (run.startedAt + HOLD_THRESHOLD_MS + run.emitted * HOLD_REPEAT_MS <= now) {
      const pos = lineExtension(run.anchor, run.normal, this.size, run.emitted + 1)[run.emitted];
      const msg = this.optimisticAdd(pos, now);
      run.ops.add(msg.op);
      msgs.push(msg);
      run.emitted += 1;
    }
    return msgs;
  }

  /** Abandon the press without acting (the pointer became a camera drag). */
  cancelHold(): void {
    this.hold = null;
  }

  pointerUp(origin: Vec3, dir: Vec3, now: number): ClientMsg[] {
    const run = this.hold;
    this.hold = null;
    if (run !== null && now - run.startedAt >= HOLD_THRESHOLD_MS) {
      return []; // the hold already emitted its run
    }
    const hit = this.aim(origin, dir);
    if (hit === null) return [];
    if (this.mode === "build") {
      return [this.optimisticAdd(placeFromHit(hit, this.size), now)];
    }
    if (this.mode === "delete") {
      if (hit.kind !== "block" || hit.blockId === null || hit.blockId! < 0) return [];
      const op = this.mintOp();
      this.pending.set(op, { kind: "del", id: hit.blockId! });
      return [{ t: "DeleteBlock", op, id: hit.blockId! }];
    }
    // eyedropper: copy the exact stored color, local only
    const picked = pickColor(this.replica.blocks, origin, dir);
    if (picked !== null) this.color = picked;
    return [];
  }

  undo(): ClientMsg {
    return { t: "Undo", op: this.mintOp() };
  }

  private optimisticAdd(pos: CellPos, now: number): Extract<ClientMsg, { t: "AddBlock" }> {
    const op = this.mintOp();
    this.pending.set(op, { kind: "add", block: { pos, size: this.size, rgb: this.color, at: now } });
    return { t: "AddBlock", op, pos, size: this.size, rgb: this.color };
  }

  /** Reconcile a server frame against optimistic state. */
  onServer(msg: ServerMsg): Reconciled {
    const rolledBack: number[] = [];
    if (msg.t === "Event") {
      const op = (msg.payload as { op?: number }).op;
      if (op !== undefined && op !== null && this.pending.has(op)) {
        this.pending.delete(op); // authoritative effect replaces the optimistic one
      }
    } else if (msg.t === "Reject" && msg.op !== null && this.pending.has(msg.op)) {
      this.pending.delete(msg.op);
      rolledBack.push(msg.op);
      if (this.hold !== null && this.hold.ops.has(msg.op)) {
        this.hold.stopped = true; // a rejected run stops extending
      }
    }
    return { rolledBack };
  }
}
