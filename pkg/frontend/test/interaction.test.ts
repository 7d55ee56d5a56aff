import { describe, expect, it } from "vitest";

import { HOLD_REPEAT_MS, HOLD_THRESHOLD_MS, InteractionCore } from "../src/core/interaction.js";
import { ClientMsg } from "../src/core/protocol.js";
import { Replica } from "../src/core/replica.js";
import { BlockDict, Vec3 } from "../src/core/types.js";

const DOWN: Vec3 = [0, -1, 0];

function freshCore(blocks: BlockDict[] = [], adds = blocks.length): InteractionCore {
  const replica = new Replica();
  replica.applySnapshot({ t: "Snapshot", world: "w", seq: blocks.length, blocks, users: [], adds });
  return new InteractionCore(replica, [200, 30, 30]);
}

function topRay(xM: number, zM: number): [Vec3, Vec3] {
  return [[xM, 1, zM], DOWN];
}

describe("tap to add", () => {
  it("emits one AddBlock with the current size and color", () => {
    const core = freshCore();
    core.size = "M";
    core.color = [1, 2, 3];
    core.pointerDown(...topRay(0.001, 0.001), 1_000);
    const msgs = core.pointerUp(...topRay(0.001, 0.001), 1_100);
    expect(msgs).toEqual([{ t: "AddBlock", op: 1, pos: [0, 0, 0], size: "M", rgb: [1, 2, 3] }]);
    expect(core.drawBlocks(0)).toHaveLength(1); // optimistic copy shows immediately
  });

  it("a cancelled press emits nothing", () => {
    const core = freshCore();
    core.pointerDown(...topRay(0.001, 0.001), 1_000);
    core.cancelHold();
    expect(core.tickHold(5_000)).toEqual([]);
    expect(core.pointerUp(...topRay(0.001, 0.001), 1_100)).toHaveLength(1); // plain tap still works
  });
});

describe("press and hold", () => {
  it("emits 3 adds in a vertical column within 1.05s on a top face", () => {
    const core = freshCore([{ id: 1, pos: [0, 0, 0], size: "S", rgb: [9, 9, 9], owner: "v", seq: 1, at: 0 }]);
    core.size = "S";
    const t0 = 10_000;
    core.pointerDown(...topRay(0.005, 0.005), t0);
    const sent: ClientMsg[] = [];
    for (let t = t0; t <= t0 + 1_050; t += 16) {
      sent.push(...core.tickHold(t));
    }
    sent.push(...core.pointerUp(...topRay(0.005, 0.005), t0 + 1_050));
    expect(sent).toHaveLength(3); // 400 + 2*250 elapsed < 1050
    const positions = sent.map((m) => (m.t === "AddBlock" ? m.pos : null));
    expect(positions).toEqual([[0, 1, 0], [0, 2, 0], [0, 3, 0]]);
  });

  it("release before the threshold is a tap, not a run", () => {
    const core = freshCore();
    core.pointerDown(...topRay(0.001, 0.001), 0);
    expect(core.tickHold(HOLD_THRESHOLD_MS - 1)).toEqual([]);
    const msgs = core.pointerUp(...topRay(0.001, 0.001), HOLD_THRESHOLD_MS - 1);
    expect(msgs).toHaveLength(1);
  });

  it("a Reject for a run op stops the run", () => {
    const core = freshCore();
    core.pointerDown(...topRay(0.001, 0.001), 0);
    const first = core.tickHold(HOLD_THRESHOLD_MS);
    expect(first).toHaveLength(1);
    const op = (first[0] as { op: number }).op;
    core.onServer({ t: "Reject", op, reason: "occupied" });
    expect(core.tickHold(HOLD_THRESHOLD_MS + 10 * HOLD_REPEAT_MS)).toEqual([]);
  });
});

describe("delete and eyedropper", () => {
  it("delete mode sends DeleteBlock for the struck block and hides it optimistically", () => {
    const target: BlockDict = { id: 7, pos: [0, 0, 0], size: "S", rgb: [9, 9, 9], owner: "v", seq: 1, at: 0 };
    const core = freshCore([target]);
    core.mode = "delete";
    const msgs = core.pointerUp(...topRay(0.005, 0.005), 100);
    expect(msgs).toEqual([{ t: "DeleteBlock", op: 1, id: 7 }]);
    expect(core.drawBlocks(0)).toHaveLength(0);
  });

  it("eyedropper copies the exact stored color locally", () => {
    const core = freshCore([{ id: 7, pos: [0, 0, 0], size: "S", rgb: [123, 45, 67], owner: "v", seq: 1, at: 0 }]);
    core.mode = "eyedropper";
    const msgs = core.pointerUp(...topRay(0.005, 0.005), 100);
    expect(msgs).toEqual([]);
    expect(core.color).toEqual([123, 45, 67]);
  });
});

describe("optimistic reconciliation", () => {
  it("a Rejected add leaves the replica equal to pure event application", () => {
    const core = freshCore();
    core.pointerDown(...topRay(0.001, 0.001), 0);
    const [msg] = core.pointerUp(...topRay(0.001, 0.001), 50);
    const op = (msg as { op: number }).op;
    expect(core.drawBlocks(0)).toHaveLength(1);
    const { rolledBack } = core.onServer({ t: "Reject", op, reason: "occupied" });
    expect(rolledBack).toEqual([op]);
    expect(core.drawBlocks(0)).toHaveLength(0);
    expect(core.replica.blocks.size).toBe(0);
  });

  it("the authoritative event replaces the optimistic copy", () => {
    const core = freshCore();
    core.pointerDown(...topRay(0.001, 0.001), 0);
    const [msg] = core.pointerUp(...topRay(0.001, 0.001), 50);
    const op = (msg as { op: number }).op;
    core.replica.applyEvent({
      seq: 1,
      origin: "me",
      time: 60,
      payload: { k: "add", block: { id: 1, pos: [0, 0, 0], size: "M", rgb: [200, 30, 30], owner: "me", seq: 1, at: 60 }, op },
    });
    core.onServer({ t: "Event", seq: 1, origin: "me", time: 60, payload: { k: "add", op } });
    const drawn = core.drawBlocks(60);
    expect(drawn).toHaveLength(1);
    expect(drawn[0].pending).toBe(false);
    expect(drawn[0].id).toBe(1);
  });

  it("aiming sees optimistic blocks so fast stacking works", () => {
    const core = freshCore();
    core.size = "S";
    core.pointerDown(...topRay(0.001, 0.001), 0);
    core.pointerUp(...topRay(0.001, 0.001), 50);
    // second tap lands on top of the still-pending first block
    core.pointerDown(...topRay(0.001, 0.001), 100);
    const [second] = core.pointerUp(...topRay(0.001, 0.001), 150);
    expect((second as { pos: number[] }).pos).toEqual([0, 1, 0]);
  });
});
