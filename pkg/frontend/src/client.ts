import {
  makeHello, makeInput, parseServerMessage, ProtocolError,
  type HelloOptions, type ServerMessage,
} from "./protocol.js";
import { SessionStore } from "./state.js";

// Transport is the injectable seam: a browser WebSocket in production, a
// scripted fake in tests. The client never touches the network directly.

export interface Transport {
  send(data: string): void;
  close(): void;
  onOpen(cb: () => void): void;
  onMessage(cb: (data: string) => void): void;
  onClose(cb: () => void): void;
}

export class SessionClient {
  readonly store: SessionStore;
  private readonly transport: Transport;
  private lastInputT = -Infinity;

  constructor(transport: Transport, store: SessionStore, opts: HelloOptions = {}) {
    this.transport = transport;
    this.store = store;
    transport.onOpen(() => {
      this.trySend(JSON.stringify(makeHello(opts)));
      store.helloSent();
    });
    transport.onMessage((data) => this.handle(data));
    transport.onClose(() => store.connectionClosed());
  }

  private handle(data: string) {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(data);
    } catch (err) {
      if (err instanceof ProtocolError) return; // tolerate junk frames
      throw err;
    }
    switch (msg.type) {
      case "hello_ack":
        this.store.acceptAck(msg);
        break;
      case "state":
        this.store.acceptFrame(msg, this.now());
        break;
      case "end":
        this.store.acceptEnd(msg);
        break;
      case "error":
        this.store.acceptError(msg);
        break;
    }
  }

  protected now(): number {
    return typeof performance !== "undefined" ? performance.now() : Date.now();
  }

  /**
   * Send one raw input sample. Drops silently once the session is over
   * (after done or end the server ignores inputs anyway) and tolerates a
   * transport that fails mid-send during the close race.
   */
  sendInput(steering: number, accel: number, t: number): boolean {
    if (!this.store.active) return false;
    if (t <= this.lastInputT) return false; // keep client timestamps monotonic
    this.lastInputT = t;
    return this.trySend(makeInput(steering, accel, t));
  }

  private trySend(data: string): boolean {
    try {
      this.transport.send(data);
      return true;
    } catch {
      return false;
    }
  }

  close() {
    try {
      this.transport.close();
    } catch {
      // already gone
    }
  }
}
