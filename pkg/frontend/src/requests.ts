// Pending custom-RoI request bookkeeping.
//
// States move forward only: sent -> acked -> fulfilled; rejected is terminal
// and reachable from sent or acked. A request is fulfilled by the first frame
// whose operator-tagged RoI matches its rect.

import type { FrameMessage } from './messages.js';
import type { FrameRect } from './coords.js';

export type RequestState = 'sent' | 'acked' | 'fulfilled' | 'rejected';

export interface PendingRequest {
  requestId: number;
  rect: FrameRect;
  persistent: boolean;
  state: RequestState;
  rejectReason?: string;
}

const ORDER: Record<RequestState, number> = { sent: 0, acked: 1, fulfilled: 2, rejected: 3 };

export class RequestStore {
  private requests = new Map<number, PendingRequest>();

  add(requestId: number, rect: FrameRect, persistent: boolean): PendingRequest {
    const req: PendingRequest = { requestId, rect, persistent, state: 'sent' };
    this.requests.set(requestId, req);
    return req;
  }

  get(requestId: number): PendingRequest | undefined {
    return this.requests.get(requestId);
  }

  list(): PendingRequest[] {
    return [...this.requests.values()];
  }

  remove(requestId: number): void {
    this.requests.delete(requestId);
  }

  private advance(req: PendingRequest, next: RequestState, reason?: string): void {
    if (req.state === 'rejected' || req.state === 'fulfilled') return;
    if (next === 'rejected') {
      req.state = 'rejected';
      req.rejectReason = reason;
      return;
    }
    if (ORDER[next] > ORDER[req.state]) req.state = next;
  }

  applyAck(requestId: number, code: number, codeName: string): void {
    const req = this.requests.get(requestId);
    if (!req) return;
    if (code === 0) this.advance(req, 'acked');
    else this.advance(req, 'rejected', codeName);
  }

  /** Mark requests whose rect shows up as an operator RoI in this frame. */
  applyFrame(frame: FrameMessage): void {
    for (const req of this.requests.values()) {
      if (req.state === 'rejected' || req.state === 'fulfilled') continue;
      const hit = frame.rois.some(
        (r) =>
          r.origin === 'operator' &&
          r.x === req.rect.x &&
          r.y === req.rect.y &&
          r.w === req.rect.w &&
          r.h === req.rect.h,
      );
      if (hit) {
        this.advance(req, 'acked');
        this.advance(req, 'fulfilled');
      }
    }
  }

  /** The request id rendered next to a matching operator RoI, if any. */
  requestIdForRoi(rect: FrameRect): number | null {
    for (const req of this.requests.values()) {
      if (
        req.rect.x === rect.x &&
        req.rect.y === rect.y &&
        req.rect.w === rect.w &&
        req.rect.h === rect.h &&
        req.state !== 'rejected'
      ) {
        return req.requestId;
      }
    }
    return null;
  }
}
