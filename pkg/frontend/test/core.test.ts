import { describe, expect, it } from "vitest";

import { Camera, cameraBasis, cameraEye, defaultCamera, screenToRay } from "../src/core/camera.js";
import { highlightFactor, isHighlighted, renderColor } from "../src/core/highlight.js";
import { HINTS, HintState } from "../src/core/hints.js";
import { lineExtension, pickColor, placeFromHit, raycast } from "../src/core/placement.js";
import { decodeClient, decodeServer, encode, MalformedMessage } from "../src/core/protocol.js";
import { Replica } from "../src/core/replica.js";
import { BlockDict, Vec3 } from "../src/core/types.js";

function block(id: number, pos: [number, number, number], size: "S" | "M" | "L" = "S", rgb: [number, number, number] = [200, 30, 30]): BlockDict {
  return { id, pos, size, rgb, owner: "u", seq: id, at: 0 };
}

describe("protocol codec", () => {
  it("round-trips the pinned AddBlock fixture", () => {
    const line = '{"t":"AddBlock","op":7,"pos":[0,0,0],"size":"S","rgb":[200,30,30]}';
    const msg = decodeClient(line);
    expect(msg).toEqual({ t: "AddBlock", op: 7, pos: [0, 0, 0], size: "S", rgb: [200, 30, 30] });
    expect(JSON.parse(encode(msg))).toEqual(JSON.parse(line));
  });

  it("decodes every server variant", () => {
    const frames = [
      '{"t":"Welcome","user":"aa","worlds":[{"id":"ourworld","kind":"shared","marker":null}]}',
      '{"t":"Snapshot","world":"w","seq":3,"blocks":[],"users":[],"adds":5}',
      '{"t":"Event","seq":4,"origin":"aa","time":9,"payload":{"k":"join","user":"aa"}}',
      '{"t":"Presence","world":"w","users":["aa"],"cursors":[]}',
      '{"t":"Reject","op":7,"reason":"occupied"}',
    ];
    for (const f of frames) expect(decodeServer(f)).toBeTruthy();
  });

  it("rejects unknown variants and bad json", () => {
    expect(() => decodeServer('{"t":"Nope"}')).toThrow(MalformedMessage);
    expect(() => decodeServer("{")).toThrow(MalformedMessage);
    expect(() => decodeServer("[1]")).toThrow(MalformedMessage);
  });
});

describe("replica", () => {
  it("applies snapshot then ordered events", () => {
    const r = new Replica();
    r.applySnapshot({ t: "Snapshot", world: "w", seq: 2, blocks: [block(1, [0, 0, 0])], users: ["u"], adds: 4 });
    expect(r.totalAdds).toBe(4);
    expect(r.applyEvent({ seq: 3, origin: "v", time: 1, payload: { k: "add", block: block(2, [1, 0, 0]) } })).toBe("applied");
    expect(r.blocks.size).toBe(2);
    expect(r.totalAdds).toBe(5);
    expect(r.applyEvent({ seq: 3, origin: "v", time: 1, payload: { k: "join", user: "v" } })).toBe("stale");
    expect(r.applyEvent({ seq: 9, origin: "v", time: 1, payload: { k: "join", user: "v" } })).toBe("gap");
    expect(r.applyEvent({ seq: 4, origin: "v", time: 2, payload: { k: "del", id: 1 } })).toBe("applied");
    expect(r.blocks.has(1)).toBe(false);
    expect(r.totalAdds).toBe(5); // deletions never decrease the info counter
  });

  it("undo events remove the recorded block only", () => {
    const r = new Replica();
    r.applySnapshot({ t: "Snapshot", world: "w", seq: 0, blocks: [block(1, [0, 0, 0]), block(2, [2, 0, 0])], users: [] });
    r.applyEvent({ seq: 1, origin: "u", time: 1, payload: { k: "undo", user: "u", removed: 2 } });
    expect([...r.blocks.keys()]).toEqual([1]);
    r.applyEvent({ seq: 2, origin: "u", time: 2, payload: { k: "undo", user: "u", removed: null } });
    expect(r.blocks.size).toBe(1);
  });
});

describe("placement", () => {
  it("ground snap matches the lattice rule", () => {
    const hit = raycast([], [0.065, 1, 0.079], [0, -1, 0])!;
    expect(hit.kind).toBe("ground");
    expect(placeFromHit(hit, "M")).toEqual([2, 0, 2]);
  });

  it("stacks flush on a top face", () => {
    const blocks = [block(1, [0, 0, 0], "S")];
    const hit = raycast(blocks, [0.012, 1, 0.004], [0, -1, 0])!;
    expect(hit.kind).toBe("block");
    expect(hit.faceNormal).toEqual([0, 1, 0]);
    expect(placeFromHit(hit, "S")).toEqual([0, 1, 0]);
  });

  it("nearest block wins and ties prefer blocks over ground", () => {
    const blocks = [block(1, [0, 0, 0], "S"), block(2, [0, 2, 0], "S")];
    const hit = raycast(blocks, [0.01, 1, 0.01], [0, -1, 0])!;
    expect(hit.blockId).toBe(2);
    const inv = 1 / Math.sqrt(2);
    const edge = raycast([block(1, [0, 0, 0], "S")], [-0.02, 0.02, 0.01], [inv, -inv, 0])!;
    expect(edge.kind).toBe("block");
  });

  it("line extension strides by the block edge", () => {
    expect(lineExtension([0, 1, 0], [0, 1, 0], "S", 3)).toEqual([[0, 1, 0], [0, 2, 0], [0, 3, 0]]);
    expect(lineExtension([2, 0, 0], [1, 0, 0], "M", 2)).toEqual([[2, 0, 0], [4, 0, 0]]);
    expect(() => lineExtension([0, 0, 0], [0, 1, 0], "S", 0)).toThrow();
  });

  it("eyedropper returns the exact stored color", () => {
    const map = new Map([[1, block(1, [0, 0, 0], "S", [123, 45, 67])]]);
    expect(pickColor(map, [0.01, 1, 0.01], [0, -1, 0])).toEqual([123, 45, 67]);
    expect(pickColor(map, [5, 1, 5], [0, -1, 0])).toBeNull(); // ground has no color
  });
});

describe("screen-to-ray", () => {
  // independent oracle: unproject through explicit projection/view matrices
  function oracleRay(cam: Camera, px: number, py: number, w: number, h: number): { origin: Vec3; dir: Vec3 } {
    const { eye, forward, right, up } = cameraBasis(cam);
    const ndcX = (2 * px) / w - 1;
    const ndcY = 1 - (2 * py) / h;
    const tanHalf = Math.tan(cam.fovY / 2);
    // view-space point on the near-ish plane z = -1
    const vx = ndcX * tanHalf * cam.aspect;
    const vy = ndcY * tanHalf;
    // transform by the inverse view matrix (rotation columns = camera basis)
    const world: Vec3 = [
      eye[0] + right[0] * vx + up[0] * vy + forward[0],
      eye[1] + right[1] * vx + up[1] * vy + forward[1],
      eye[2] + right[2] * vx + up[2] * vy + forward[2],
    ];
    const d: Vec3 = [world[0] - eye[0], world[1] - eye[1], world[2] - eye[2]];
    const n = Math.hypot(...d);
    return { origin: eye, dir: [d[0] / n, d[1] / n, d[2] / n] };
  }

  it("center pixel looks along the view axis", () => {
    const cam = defaultCamera(2.0);
    const { origin, dir } = screenToRay(cam, 400, 200, 800, 400);
    const { forward } = cameraBasis(cam);
    expect(origin).toEqual(cameraEye(cam));
    for (let i = 0; i < 3; i++) expect(dir[i]).toBeCloseTo(forward[i], 9);
  });

  it("corner pixels match the unprojection oracle within 1e-6", () => {
    const cam = defaultCamera(1.7);
    cam.yaw = 0.9;
    cam.pitch = 0.3;
    for (const [px, py] of [[0, 0], [799, 0], [0, 399], [799, 399], [123, 321]]) {
      const got = screenToRay(cam, px, py, 800, 400);
      const expected = oracleRay(cam, px, py, 800, 400);
      for (let i = 0; i < 3; i++) {
        expect(Math.abs(got.dir[i] - expected.dir[i])).toBeLessThan(1e-6);
      }
    }
  });

  it("resizing the viewport keeps the center ray", () => {
    const cam = defaultCamera(16 / 9);
    const a = screenToRay(cam, 160, 90, 320, 180);
    cam.aspect = 4 / 3;
    const b = screenToRay(cam, 200, 150, 400, 300);
    for (let i = 0; i < 3; i++) expect(a.dir[i]).toBeCloseTo(b.dir[i], 12);
  });
});

describe("highlight fade", () => {
  it("renders lightened at or before 1.4s and normal from 1.6s", () => {
    const placed = 10_000;
    expect(isHighlighted(placed, placed + 1_400)).toBe(true);
    expect(renderColor([10, 20, 30], placed, placed + 1_400)).not.toEqual([10, 20, 30]);
    expect(isHighlighted(placed, placed + 1_600)).toBe(false);
    expect(renderColor([10, 20, 30], placed, placed + 1_600)).toEqual([10, 20, 30]);
  });

  it("fades monotonically inside the window", () => {
    let prev = highlightFactor(0, 0);
    for (let t = 100; t <= 1_500; t += 100) {
      const f = highlightFactor(0, t);
      expect(f).toBeLessThan(prev);
      prev = f;
    }
    expect(highlightFactor(0, 1_500)).toBe(0);
    expect(highlightFactor(0, 1_499)).toBeGreaterThan(0);
  });
});

describe("hints", () => {
  it("walks each feature once and persists dismissals", () => {
    const h = new HintState();
    const seen: string[] = [];
    while (h.currentHint() !== null) {
      seen.push(h.currentHint()!.id);
      h.next();
    }
    expect(seen).toEqual(HINTS.map((x) => x.id));
    const again = new HintState(h.dismissed);
    expect(again.currentHint()).toBeNull();
    again.reopen();
    expect(again.currentHint()!.id).toBe(HINTS[0].id);
  });
});
