/**
 * Live channel client: uplink events in, scenario-control commands out.
 *
 * Commands are the only path that mutates simulation state; each carries
 * a ref and resolves on the matching ack, so callers can roll back UI
 * state when a command is rejected.
 */

import type { UplinkEvent } from "./store.js";

export interface ControlResult {
  ok: boolean;
  error?: string;
  fire_id?: number;
  [key: string]: unknown;
}

/** The subset of WebSocket the client uses; tests substitute a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface LiveHandlers {
  onUplink?: (event: UplinkEvent) => void;
  onStateChange?: (connected: boolean) => void;
}

export class LiveClient {
  connected = false;
  readonly commandAudit: object[] = [];
  private sock: SocketLike | null = null;
  private nextRef = 1;
  private pending = new Map<number, (result: ControlResult) => void>();

  constructor(
    private url: string,
    private handlers: LiveHandlers = {},
    private makeSocket: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    const sock = this.makeSocket(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.connected = true;
      this.handlers.onStateChange?.(true);
    };
    sock.onclose = () => {
      this.connected = false;
      this.handlers.onStateChange?.(false);
      for (const resolve of this.pending.values()) {
        resolve({ ok: false, error: "disconnected" });
      }
      this.pending.clear();
    };
    sock.onmessage = (ev) => this.handleMessage(ev.data);
  }

  private handleMessage(data: string): void {
    let msg: any;
    try {
      msg = JSON.parse(data);
    } catch {
      return;
    }
    if (msg.type === "uplink") {
      this.handlers.onUplink?.(msg as UplinkEvent);
    } else if (msg.type === "ack") {
      const resolve = this.pending.get(msg.ref);
      if (resolve) {
        this.pending.delete(msg.ref);
        resolve(msg.result as ControlResult);
      }
    } else if (msg.type === "overflow") {
      // server dropped us as a slow consumer; surface as a disconnect
      this.sock?.close();
    }
  }

  /** Send one scenario-control command; resolves with the server's ack. */
  control(command: object): Promise<ControlResult> {
    if (!this.sock || !this.connected) {
      return Promise.resolve({ ok: false, error: "not connected" });
    }
    const ref = this.nextRef++;
    this.commandAudit.push(command);
    const payload = JSON.stringify({ type: "scenario_control", ref, command });
    return new Promise((resolve) => {
      this.pending.set(ref, resolve);
      this.sock!.send(payload);
    });
  }

  close(): void {
    this.sock?.close();
  }
}

export function liveUrl(appId: string, key: string, base?: string): string {
  const origin = base ?? `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}`;
  return `${origin}/live?app=${encodeURIComponent(appId)}&key=${encodeURIComponent(key)}`;
}
