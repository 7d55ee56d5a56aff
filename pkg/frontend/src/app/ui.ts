// DOM chrome around the canvas: toolbar, pickers, info panel, world
// switcher, onboarding hints, and transient toasts.

import { HintState, HINTS } from "../core/hints.js";
import { Mode } from "../core/interaction.js";
import { Color, SizeLetter, WorldEntry } from "../core/types.js";

export interface UiHandlers {
  onMode(mode: Mode): void;
  onSize(size: SizeLetter): void;
  onColor(rgb: Color): void;
  onUndo(): void;
  onWorld(id: string): void;
  onMute(muted: boolean): void;
  onMarkerDebug(): void;
}

export function colorToHex(rgb: Color): string {
  return "#" + rgb.map((c) => c.toString(16).padStart(2, "0")).join("");
}

export function hexToColor(hex: string): Color {
  return [parseInt(hex.slice(1, 3), 16), parseInt(hex.slice(3, 5), 16), parseInt(hex.slice(5, 7), 16)];
}

export class Ui {
  root: HTMLElement;
  private info: HTMLElement;
  private status: HTMLElement;
  private worldSelect: HTMLSelectElement;
  private colorInput: HTMLInputElement;
  private hintBox: HTMLElement;
  private markerButton: HTMLButtonElement;
  private modeButtons = new Map<Mode, HTMLButtonElement>();
  private sizeButtons = new Map<SizeLetter, HTMLButtonElement>();
  hints: HintState;

  constructor(parent: HTMLElement, private handlers: UiHandlers) {
    const stored = localStorage.getItem("hintsDismissed");
    this.hints = new HintState(stored ? JSON.parse(stored) : []);

    this.root = el("div", "hud");
    parent.appendChild(this.root);

    const toolbar = el("div", "toolbar");
    this.root.appendChild(toolbar);

    for (const mode of ["build", "delete", "eyedropper"] as Mode[]) {
      const b = button(mode === "build" ? "build" : mode === "delete" ? "delete" : "pick color", () => {
        this.handlers.onMode(mode);
        this.setMode(mode);
      });
      this.modeButtons.set(mode, b);
      toolbar.appendChild(b);
    }
    toolbar.appendChild(button("undo", () => this.handlers.onUndo()));

    for (const size of ["S", "M", "L"] as SizeLetter[]) {
      const b = button(size, () => {
        this.handlers.onSize(size);
        this.setSize(size);
      });
      this.sizeButtons.set(size, b);
      toolbar.appendChild(b);
    }

    this.colorInput = document.createElement("input");
    this.colorInput.type = "color";
    this.colorInput.title = "block color (continuous range)";
    this.colorInput.oninput = () => this.handlers.onColor(hexToColor(this.colorInput.value));
    toolbar.appendChild(this.colorInput);

    this.worldSelect = document.createElement("select");
    this.worldSelect.onchange = () => this.handlers.onWorld(this.worldSelect.value);
    toolbar.appendChild(this.worldSelect);

    const mute = document.createElement("input");
    mute.type = "checkbox";
    const muteLabel = el("label", "mute");
    muteLabel.append(mute, document.createTextNode("mute"));
    mute.onchange = () => this.handlers.onMute(mute.checked);
    toolbar.appendChild(muteLabel);

    this.markerButton = button("I see the marker", () => this.handlers.onMarkerDebug());
    this.markerButton.style.display = "none";
    toolbar.appendChild(this.markerButton);

    toolbar.appendChild(button("i", () => this.showHints(true)));

    this.info = el("div", "info");
    this.root.appendChild(this.info);
    this.status = el("div", "status");
    this.root.appendChild(this.status);
    this.hintBox = el("div", "hints");
    this.root.appendChild(this.hintBox);
    this.renderHints();
    this.setMode("build");
    this.setSize("M");
  }

  setMode(mode: Mode): void {
    for (const [m, b] of this.modeButtons) b.classList.toggle("active", m === mode);
  }

  setSize(size: SizeLetter): void {
    for (const [s, b] of this.sizeButtons) b.classList.toggle("active", s === size);
  }

  setColor(rgb: Color): void {
    this.colorInput.value = colorToHex(rgb);
  }

  setWorlds(worlds: WorldEntry[], current: string | null): void {
    this.worldSelect.replaceChildren(
      ...worlds.map((entry) => {
        const opt = document.createElement("option");
        opt.value = entry.id;
        opt.textContent = entry.kind === "personal" ? "MyWorld" : entry.id + (entry.marker ? " 📍" : "");
        opt.selected = entry.id === current;
        return opt;
      }),
    );
  }

  setMarkerVisible(markerId: string | null): void {
    this.markerButton.style.display = markerId === null ? "none" : "";
    if (markerId !== null) this.markerButton.textContent = `I see ${markerId}`;
  }

  setInfo(blocksAdded: number, usersOnline: number): void {
    this.info.textContent = `${blocksAdded} blocks added · ${usersOnline} online`;
  }

  setStatus(text: string): void {
    this.status.textContent = text;
  }

  toast(text: string): void {
    const node = el("div", "toast");
    node.textContent = text;
    this.root.appendChild(node);
    setTimeout(() => node.remove(), 2200);
  }

  showHints(reopen: boolean): void {
    if (reopen) this.hints.reopen();
    this.renderHints();
  }

  private renderHints(): void {
    const hint = this.hints.currentHint();
    if (hint === null) {
      this.hintBox.style.display = "none";
      localStorage.setItem("hintsDismissed", JSON.stringify([...this.hints.dismissed]));
      return;
    }
    this.hintBox.style.display = "";
    this.hintBox.replaceChildren(
      el("span", "", `${this.hints.current + 1}/${HINTS.length} — ${hint.text}`),
      button("next", () => {
        this.hints.next();
        this.renderHints();
      }),
      button("skip all", () => {
        this.hints.dismissAll();
        this.renderHints();
      }),
    );
  }
}

function el(tag: string, cls: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onclick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  b.onclick = onclick;
  return b;
}
