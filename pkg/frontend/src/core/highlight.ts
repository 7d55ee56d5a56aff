// Recent-change highlight: new blocks render lightened and fade back to
// their own color over the highlight window.

import { Color, HIGHLIGHT_MS } from "./types.js";

/** 1 at the moment of placement, 0 from 1.5 s on (linear fade). */
export function highlightFactor(createdAt: number, now: number): number {
  const age = now - createdAt;
  if (age < 0) return 1;
  if (age >= HIGHLIGHT_MS) return 0;
  return 1 - age / HIGHLIGHT_MS;
}

export function isHighlighted(createdAt: number, now: number): boolean {
  return highlightFactor(createdAt, now) > 0;
}

/** Lerp the block color toward white by the fading factor. */
export function renderColor(rgb: Color, createdAt: number, now: number): Color {
  const f = highlightFactor(createdAt, now) * 0.65;
  return [
    Math.round(rgb[0] + (255 - rgb[0]) * f),
    Math.round(rgb[1] + (255 - rgb[1]) * f),
    Math.round(rgb[2] + (255 - rgb[2]) * f),
  ];
}
