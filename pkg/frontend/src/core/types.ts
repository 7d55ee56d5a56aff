export type Vec3 = [number, number, number];
export type CellPos = [number, number, number];
export type Color = [number, number, number];
export type SizeLetter = "S" | "M" | "L";

/** Edge of one fine lattice cell, meters. */
export const FINE_UNIT_M = 0.02;
/** Block edge length in fine units per size class. */
export const EDGE: Record<SizeLetter, number> = { S: 1, M: 2, L: 4 };
/** Recently added blocks render lightened for this long. */
export const HIGHLIGHT_MS = 1500;

export interface BlockDict {
  id: number;
  pos: CellPos;
  size: SizeLetter;
  rgb: Color;
  owner: string;
  seq: number;
  at: number;
}

export interface EventRecord {
  seq: number;
  origin: string;
  time: number;
  payload: Record<string, unknown>;
}

export interface CursorInfo {
  user: string;
  origin: Vec3;
  dir: Vec3;
  size: SizeLetter;
  rgb: Color;
}

export interface WorldEntry {
  id: string;
  kind: "personal" | "shared";
  marker: string | null;
  freshness_ms?: number;
}

export function vadd(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function vscale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function vnorm(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]);
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function vcross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}
