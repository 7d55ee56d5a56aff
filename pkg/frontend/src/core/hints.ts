// Onboarding hints: shown once per feature, reopenable from the info button.

export interface Hint {
  id: string;
  text: string;
}

export const HINTS: Hint[] = [
  { id: "add", text: "Tap anywhere on the ground or on a block to add a block." },
  { id: "hold", text: "Press and hold to grow a column or row of blocks." },
  { id: "size", text: "Pick a block size: small, medium, or large." },
  { id: "color", text: "Choose any color, or aim at a block and use the eyedropper to copy its color." },
  { id: "undo", text: "Undo removes the last block you added yourself." },
  { id: "delete", text: "Delete mode removes any block, added by anyone." },
  { id: "cursors", text: "Collaborators' cursors show exactly what they are about to place." },
  { id: "worlds", text: "Warm up in MyWorld, then build together in OurWorld." },
];

export class HintState {
  current = 0;
  dismissed: Set<string>;
  open: boolean;

  constructor(dismissed: Iterable<string> = []) {
    this.dismissed = new Set(dismissed);
    this.open = this.dismissed.size < HINTS.length;
    this.skipDismissed();
  }

  private skipDismissed(): void {
    while (this.current < HINTS.length && this.dismissed.has(HINTS[this.current].id)) {
      this.current += 1;
    }
    if (this.current >= HINTS.length) this.open = false;
  }

  currentHint(): Hint | null {
    return this.open && this.current < HINTS.length ? HINTS[this.current] : null;
  }

  next(): void {
    const hint = this.currentHint();
    if (hint === null) return;
    this.dismissed.add(hint.id);
    this.current += 1;
    this.skipDismissed();
  }

  dismissAll(): void {
    for (const hint of HINTS) this.dismissed.add(hint.id);
    this.open = false;
  }

  reopen(): void {
    this.current = 0;
    this.dismissed.clear();
    this.open = true;
  }
}
