// Wire frames: UTF-8 JSON, one message per frame, discriminated by "t".
// Mirrors the server's schema (docs/protocol.md in the repository root).

import { BlockDict, CellPos, Color, CursorInfo, EventRecord, SizeLetter, Vec3, WorldEntry } from "./types.js";

export type ClientMsg =
  | { t: "Hello"; user?: string }
  | { t: "JoinWorld"; world: string; after?: number }
  | { t: "AddBlock"; op: number; pos: CellPos; size: SizeLetter; rgb: Color }
  | { t: "DeleteBlock"; op: number; id: number }
  | { t: "Undo"; op: number }
  | { t: "CursorUpdate"; origin: Vec3; dir: Vec3; size: SizeLetter; rgb: Color }
  | { t: "MarkerObserved"; marker: string; pose: number[]; at: number }
  | { t: "Leave" };

export type ServerMsg =
  | { t: "Welcome"; user: string; worlds: WorldEntry[] }
  | { t: "Snapshot"; world: string; seq: number; blocks: BlockDict[]; users: string[]; adds?: number }
  | ({ t: "Event" } & EventRecord)
  | { t: "Presence"; world: string; users: string[]; cursors: CursorInfo[] }
  | { t: "Reject"; op: number | null; reason: string };

export class MalformedMessage extends Error {}

const SERVER_TAGS = new Set(["Welcome", "Snapshot", "Event", "Presence", "Reject"]);
const CLIENT_TAGS = new Set([
  "Hello",
  "JoinWorld",
  "AddBlock",
  "DeleteBlock",
  "Undo",
  "CursorUpdate",
  "MarkerObserved",
  "Leave",
]);

export function encode(msg: ClientMsg | ServerMsg): string {
  return JSON.stringify(msg);
}

export function decodeServer(data: string): ServerMsg {
  const obj = parse(data);
  if (!SERVER_TAGS.has(obj.t as string)) {
    throw new MalformedMessage(`unknown server variant ${String(obj.t)}`);
  }
  return obj as ServerMsg;
}

export function decodeClient(data: string): ClientMsg {
  const obj = parse(data);
  if (!CLIENT_TAGS.has(obj.t as string)) {
    throw new MalformedMessage(`unknown client variant ${String(obj.t)}`);
  }
  return obj as ClientMsg;
}

function parse(data: string): Record<string, unknown> {
  let obj: unknown;
  try {
    obj = JSON.parse(data);
  } catch (e) {
    throw new MalformedMessage(`bad JSON: ${(e as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new MalformedMessage("frame is not an object");
  }
  return obj as Record<string, unknown>;
}
