// Acceptance: two clients co-building for 60 (simulated) seconds converge to
// identical snapshots matching the server, and Reject(occupied) visibly rolls
// back the optimistic block.

import { describe, expect, it } from "vitest";

import { InteractionCore } from "../src/core/interaction.js";
import { ServerMsg } from "../src/core/protocol.js";
import { Replica } from "../src/core/replica.js";
import { Vec3 } from "../src/core/types.js";
import { MiniServer } from "./helpers.js";

const DOWN: Vec3 = [0, -1, 0];

interface Sim {
  server: MiniServer;
  clients: { user: string; core: InteractionCore; replica: Replica }[];
  deliver(origin: string, outcome: { broadcast?: ServerMsg; reject?: ServerMsg }): void;
}

function makeSim(): Sim {
  const server = new MiniServer();
  const clients = ["ann", "bob"].map((user, i) => {
    const replica = new Replica();
    replica.applySnapshot(server.snapshot() as never);
    return { user, core: new InteractionCore(replica, [200, 30, 30], 1 + i * 1_000_000), replica };
  });
  return {
    server,
    clients,
    deliver(origin, outcome) {
      if (outcome.broadcast !== undefined) {
        for (const c of clients) {
          c.replica.applyEvent(outcome.broadcast as never);
          c.core.onServer(outcome.broadcast);
        }
      }
      if (outcome.reject !== undefined) {
        const target = clients.find((c) => c.user === origin)!;
        target.core.onServer(outcome.reject);
      }
    },
  };
}

describe("two-client convergence", () => {
  it("60 seconds of interleaved co-building converges to the server state", () => {
    const sim = makeSim();
    const rng = mulberry32(424242);
    let rejectsSeen = 0;

    // 60 s of alternating taps every 250 ms; roughly every 6th round both
    // clients race for the same spot before either has seen the other's add
    for (let t = 0; t < 60_000; t += 250) {
      const actor = sim.clients[(t / 250) % 2];
      const other = sim.clients[1 - ((t / 250) % 2)];
      const contested = (t / 250) % 6 === 0;
      const x = 0.021 + rng() * 0.3;
      const z = 0.021 + rng() * 0.3;

      if (contested) {
        // both aim and commit against their own (equal) replicas, then the
        // server decides; deliveries land after both taps, like real latency
        actor.core.pointerDown([x, 2, z], DOWN, t);
        const a = actor.core.pointerUp([x, 2, z], DOWN, t + 80);
        other.core.pointerDown([x, 2, z], DOWN, t);
        const b = other.core.pointerUp([x, 2, z], DOWN, t + 90);
        const outcomes = [
          ...a.map((msg) => [actor.user, sim.server.submit(msg, actor.user, t)] as const),
          ...b.map((msg) => [other.user, sim.server.submit(msg, other.user, t)] as const),
        ];
        for (const [user, outcome] of outcomes) {
          if (outcome.reject !== undefined) rejectsSeen += 1;
          sim.deliver(user, outcome);
        }
      } else {
        actor.core.pointerDown([x, 2, z], DOWN, t);
        const msgs = actor.core.pointerUp([x, 2, z], DOWN, t + 80);
        for (const msg of msgs) {
          const outcome = sim.server.submit(msg, actor.user, t);
          if (outcome.reject !== undefined) rejectsSeen += 1;
          sim.deliver(actor.user, outcome);
        }
      }
      // occasionally delete or undo
      if ((t / 250) % 17 === 0 && sim.server.blocks.size > 0) {
        const victim = [...sim.server.blocks.keys()][Math.floor(rng() * sim.server.blocks.size)];
        actor.core.mode = "delete";
        const hitRay: Vec3 = [
          sim.server.blocks.get(victim)!.pos[0] * 0.02 + 0.005,
          2,
          sim.server.blocks.get(victim)!.pos[2] * 0.02 + 0.005,
        ];
        const del = actor.core.pointerUp(hitRay, DOWN, t + 120);
        for (const msg of del) sim.deliver(actor.user, sim.server.submit(msg, actor.user, t));
        actor.core.mode = "build";
      }
    }

    expect(rejectsSeen).toBeGreaterThan(0); // conflicts actually happened
    const serverMap = sim.server.blockMap();
    for (const c of sim.clients) {
      expect(c.core.pending.size).toBe(0); // everything reconciled
      expect(c.replica.blockMap()).toEqual(serverMap);
    }
    expect(sim.clients[0].replica.blockMap()).toEqual(sim.clients[1].replica.blockMap());
  });

  it("Reject(occupied) visibly rolls back the optimistic block", () => {
    const sim = makeSim();
    const [ann, bob] = sim.clients;

    // both tap the same empty spot before either delivery lands (the race)
    ann.core.pointerDown([0.001, 1, 0.001], DOWN, 0);
    const [annAdd] = ann.core.pointerUp([0.001, 1, 0.001], DOWN, 50);
    bob.core.pointerDown([0.001, 1, 0.001], DOWN, 10);
    const [bobAdd] = bob.core.pointerUp([0.001, 1, 0.001], DOWN, 60);
    expect(bob.core.drawBlocks(0).filter((d) => d.pending)).toHaveLength(1); // optimistic copy visible

    const annOutcome = sim.server.submit(annAdd, ann.user, 70); // first-sequenced wins
    const bobOutcome = sim.server.submit(bobAdd, bob.user, 80);
    expect(bobOutcome.reject).toEqual({ t: "Reject", op: (bobAdd as { op: number }).op, reason: "occupied" });
    sim.deliver(ann.user, annOutcome);
    sim.deliver(bob.user, bobOutcome);

    expect(bob.core.drawBlocks(0).filter((d) => d.pending)).toHaveLength(0); // rolled back
    expect(bob.replica.blockMap()).toEqual(sim.server.blockMap());
    expect(bob.core.drawBlocks(0)).toHaveLength(1); // only ann's authoritative block remains
  });
});

function mulberry32(seed: number): () => number {
  let a = seed;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
