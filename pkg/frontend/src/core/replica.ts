// Authoritative world mirror, rebuilt from Snapshot + ordered Events.

import { ServerMsg } from "./protocol.js";
import { BlockDict, EventRecord } from "./types.js";

export type ApplyStatus = "applied" | "stale" | "gap";

export class Replica {
  worldId: string | null = null;
  seq = 0;
  blocks = new Map<number, BlockDict>();
  users = new Set<string>();
  /** Cumulative adds (the info panel number), carried by snapshots and
   * advanced by add events; deletions never decrease it. */
  totalAdds = 0;

  applySnapshot(msg: Extract<ServerMsg, { t: "Snapshot" }>): void {
    this.worldId = msg.world;
    this.seq = msg.seq;
    this.blocks = new Map(msg.blocks.map((b) => [b.id, b]));
    this.users = new Set(msg.users);
    this.totalAdds = msg.adds ?? msg.blocks.length;
  }

  applyEvent(event: EventRecord): ApplyStatus {
    if (event.seq <= this.seq) return "stale";
    if (event.seq !== this.seq + 1) return "gap";
    const p = event.payload as Record<string, unknown>;
    switch (p.k) {
      case "add": {
        const block = p.block as BlockDict;
        this.blocks.set(block.id, block);
        this.totalAdds += 1;
        break;
      }
      case "del":
        this.blocks.delete(p.id as number);
        break;
      case "undo":
        if (p.removed !== null) this.blocks.delete(p.removed as number);
        break;
      case "join":
        this.users.add(p.user as string);
        break;
      case "leave":
        this.users.delete(p.user as string);
        break;
      // marker events carry no block changes
    }
    this.seq = event.seq;
    return "applied";
  }

  blockMap(): Record<number, BlockDict> {
    return Object.fromEntries(this.blocks);
  }
}
