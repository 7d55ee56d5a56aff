// WebSocket client: handshake, world switching, ordered event application
// with gap-triggered catch-up, and automatic reconnect.

import { ClientMsg, ServerMsg, decodeServer, encode } from "../core/protocol.js";
import { Replica } from "../core/replica.js";
import { CursorInfo, WorldEntry } from "../core/types.js";

export interface NetHandlers {
  onWelcome(user: string, worlds: WorldEntry[]): void;
  onWorldChanged(): void;
  onServerMsg(msg: ServerMsg): void;
  onPresence(users: string[], cursors: CursorInfo[]): void;
  onStatus(text: string): void;
}

export class Connection {
  ws: WebSocket | null = null;
  user: string | null;
  worldId: string | null = null;
  replica = new Replica();
  private buffered = new Map<number, ServerMsg & { t: "Event" }>();
  private catchupInflight = false;
  private closedByUs = false;

  constructor(
    private url: string,
    private handlers: NetHandlers,
    storedUser: string | null,
  ) {
    this.user = storedUser;
  }

  connect(): void {
    this.closedByUs = false;
    this.handlers.onStatus("connecting…");
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.handlers.onStatus("connected");
      this.send(this.user ? { t: "Hello", user: this.user } : { t: "Hello" });
      if (this.worldId !== null) {
        // resume: ask only for what we missed
        this.send({ t: "JoinWorld", world: this.worldId, after: this.replica.seq });
        this.catchupInflight = true;
      }
    };
    ws.onmessage = (ev) => this.receive(String(ev.data));
    ws.onclose = () => {
      this.ws = null;
      if (!this.closedByUs) {
        this.handlers.onStatus("reconnecting…");
        setTimeout(() => this.connect(), 1000 + Math.random() * 1000);
      }
    };
  }

  close(): void {
    this.closedByUs = true;
    this.ws?.close();
  }

  send(msg: ClientMsg): void {
    if (this.ws !== null && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encode(msg));
    }
  }

  join(worldId: string): void {
    if (this.worldId === worldId) return;
    this.worldId = worldId;
    this.replica = new Replica();
    this.buffered.clear();
    this.catchupInflight = false;
    this.send({ t: "JoinWorld", world: worldId });
    this.handlers.onWorldChanged();
  }

  private requestCatchup(): void {
    if (this.catchupInflight || this.worldId === null) return;
    this.catchupInflight = true;
    this.send({ t: "JoinWorld", world: this.worldId, after: this.replica.seq });
  }

  private receive(data: string): void {
    const msg = decodeServer(data);
    switch (msg.t) {
      case "Welcome":
        this.user = msg.user;
        this.handlers.onWelcome(msg.user, msg.worlds);
        return;
      case "Snapshot":
        if (msg.world !== this.worldId) return;
        this.replica.applySnapshot(msg);
        this.catchupInflight = false;
        this.drain();
        break;
      case "Event": {
        const status = this.replica.applyEvent(msg);
        if (status === "applied") {
          this.drain();
        } else if (status === "gap") {
          this.buffered.set(msg.seq, msg);
          this.requestCatchup();
        }
        break;
      }
      case "Presence":
        if (msg.world === this.worldId) this.handlers.onPresence(msg.users, msg.cursors);
        return;
      case "Reject":
        break;
    }
    this.handlers.onServerMsg(msg);
  }

  private drain(): void {
    while (this.buffered.has(this.replica.seq + 1)) {
      const next = this.buffered.get(this.replica.seq + 1)!;
      this.buffered.delete(next.seq);
      this.replica.applyEvent(next);
      this.handlers.onServerMsg(next);
    }
    for (const seq of [...this.buffered.keys()]) {
      if (seq <= this.replica.seq) this.buffered.delete(seq);
    }
    if (this.buffered.size === 0) this.catchupInflight = false;
  }
}
