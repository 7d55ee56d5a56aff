// A miniature authoritative sequencer standing in for the server: first-wins
// occupancy, gapless seqs, per-op dedup. Independent of the client code under
// test; convergence checks run against this.

import { ClientMsg, ServerMsg } from "../src/core/protocol.js";
import { blockCells } from "../src/core/placement.js";
import { BlockDict, CellPos } from "../src/core/types.js";

export class MiniServer {
  seq = 0;
  nextId = 1;
  blocks = new Map<number, BlockDict>();
  occupancy = new Map<string, number>();
  undoStacks = new Map<string, number[]>();
  totalAdds = 0;
  private seen = new Map<string, ServerMsg>();

  private key(cell: CellPos): string {
    return cell.join(",");
  }

  snapshot(world = "w"): ServerMsg {
    return {
      t: "Snapshot",
      world,
      seq: this.seq,
      blocks: [...this.blocks.values()],
      users: [],
      adds: this.totalAdds,
    };
  }

  /** Apply one mutating command; returns the frames to deliver: broadcast
   * events go to everyone, rejects only to the origin. */
  submit(cmd: ClientMsg, origin: string, now: number): { broadcast?: ServerMsg; reject?: ServerMsg } {
    if (cmd.t !== "AddBlock" && cmd.t !== "DeleteBlock" && cmd.t !== "Undo") {
      throw new Error(`not a mutating command: ${cmd.t}`);
    }
    const dedupKey = `${origin}:${cmd.op}`;
    const cached = this.seen.get(dedupKey);
    if (cached !== undefined) {
      return cached.t === "Reject" ? { reject: cached } : { broadcast: cached };
    }
    let outcome: { broadcast?: ServerMsg; reject?: ServerMsg };
    if (cmd.t === "AddBlock") {
      const cells = blockCells(cmd.pos, cmd.size);
      if (cmd.pos[1] < 0 || cells.some((c) => this.occupancy.has(this.key(c)))) {
        outcome = { reject: { t: "Reject", op: cmd.op, reason: cmd.pos[1] < 0 ? "malformed" : "occupied" } };
      } else {
        this.seq += 1;
        const block: BlockDict = {
          id: this.nextId++,
          pos: cmd.pos,
          size: cmd.size,
          rgb: cmd.rgb,
          owner: origin,
          seq: this.seq,
          at: now,
        };
        this.blocks.set(block.id, block);
        for (const c of cells) this.occupancy.set(this.key(c), block.id);
        const stack = this.undoStacks.get(origin) ?? [];
        stack.push(block.id);
        this.undoStacks.set(origin, stack);
        this.totalAdds += 1;
        outcome = {
          broadcast: { t: "Event", seq: this.seq, origin, time: now, payload: { k: "add", block, op: cmd.op } },
        };
      }
    } else if (cmd.t === "DeleteBlock") {
      const block = this.blocks.get(cmd.id);
      if (block === undefined) {
        outcome = { reject: { t: "Reject", op: cmd.op, reason: "not_found" } };
      } else {
        this.remove(block);
        this.seq += 1;
        outcome = {
          broadcast: {
            t: "Event",
            seq: this.seq,
            origin,
            time: now,
            payload: { k: "del", id: block.id, by: origin, owner: block.owner, other: origin !== block.owner, op: cmd.op },
          },
        };
      }
    } else {
      const stack = this.undoStacks.get(origin) ?? [];
      let removed: number | null = null;
      while (stack.length > 0) {
        const id = stack.pop()!;
        const block = this.blocks.get(id);
        if (block !== undefined) {
          this.remove(block);
          removed = id;
          break;
        }
      }
      this.seq += 1;
      outcome = {
        broadcast: { t: "Event", seq: this.seq, origin, time: now, payload: { k: "undo", user: origin, removed, op: cmd.op } },
      };
    }
    const frame = outcome.broadcast ?? outcome.reject!;
    this.seen.set(dedupKey, frame);
    return outcome;
  }

  private remove(block: BlockDict): void {
    this.blocks.delete(block.id);
    for (const c of blockCells(block.pos, block.size)) this.occupancy.delete(this.key(c));
  }

  blockMap(): Record<number, BlockDict> {
    return Object.fromEntries(this.blocks);
  }
}
