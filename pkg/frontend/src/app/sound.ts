// Two short synthesized clicks (add / delete) with a mute toggle.

export class Clicks {
  muted = false;
  private ctx: AudioContext | null = null;

  private context(): AudioContext | null {
    if (typeof AudioContext === "undefined") return null;
    if (this.ctx === null) this.ctx = new AudioContext();
    return this.ctx;
  }

  private blip(freq: number): void {
    if (this.muted) return;
    const ctx = this.context();
    if (ctx === null) return;
    const osc = ctx.createOscillator();
    const gain = ctx.createGain();
    osc.type = "square";
    osc.frequency.value = freq;
    gain.gain.setValueAtTime(0.12, ctx.currentTime);
    gain.gain.exponentialRampToValueAtTime(0.001, ctx.currentTime + 0.08);
    osc.connect(gain).connect(ctx.destination);
    osc.start();
    osc.stop(ctx.currentTime + 0.09);
  }

  add(): void {
    this.blip(880);
  }

  remove(): void {
    this.blip(330);
  }
}
