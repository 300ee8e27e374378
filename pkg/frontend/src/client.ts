// Ground-station WebSocket client. The socket constructor is injectable so
// tests (and the node e2e harness) can supply their own implementation.

import { parseServerMessage } from './messages.js';
import type { AckMessage, FrameMessage, RequestMessage } from './messages.js';
import type { FrameRect } from './coords.js';

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export interface ClientHandlers {
  onFrame?: (frame: FrameMessage) => void;
  onAck?: (ack: AckMessage) => void;
  onOpen?: () => void;
  onClose?: () => void;
}

export class GroundClient {
  private ws: WebSocketLike;
  private nextRequestId = 1;

  constructor(
    url: string,
    private handlers: ClientHandlers,
    factory: (url: string) => WebSocketLike = (u) => new WebSocket(u) as unknown as WebSocketLike,
  ) {
    this.ws = factory(url);
    this.ws.onopen = () => this.handlers.onOpen?.();
    this.ws.onclose = () => this.handlers.onClose?.();
    this.ws.onerror = () => undefined;
    this.ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) return; // malformed frame: skipped
      if (msg.type === 'frame') this.handlers.onFrame?.(msg);
      else this.handlers.onAck?.(msg);
    };
  }

  submitRequest(rect: FrameRect, persistent = false): RequestMessage {
    const message: RequestMessage = {
      type: 'request',
      request_id: this.nextRequestId++,
      x: rect.x,
      y: rect.y,
      w: rect.w,
      h: rect.h,
      persistent,
    };
    this.ws.send(JSON.stringify(message));
    return message;
  }

  cancelRequest(requestId: number): void {
    this.ws.send(JSON.stringify({ type: 'cancel', request_id: requestId }));
  }

  close(): void {
    this.ws.close();
  }
}
