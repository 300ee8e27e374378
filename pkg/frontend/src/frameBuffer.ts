// Newest-wins frame slot: receiving never blocks on rendering, and a lagging
// renderer skips straight to the most recent frame.

import type { FrameMessage } from './messages.js';

export class FrameBuffer {
  private slot: FrameMessage | null = null;
  private _dropped = 0;
  private _received = 0;

  push(frame: FrameMessage): void {
    if (this.slot !== null) this._dropped += 1;
    this.slot = frame;
    this._received += 1;
  }

  /** The newest unrendered frame, or null; clears the slot. */
  take(): FrameMessage | null {
    const frame = this.slot;
    this.slot = null;
    return frame;
  }

  get dropped(): number {
    return this._dropped;
  }

  get received(): number {
    return this._received;
  }
}
