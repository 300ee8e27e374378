// Click-drag rectangle controller with live preview.
//
// Coordinates come in as canvas positions; the finished drag is mapped to an
// integer frame rect and submitted only when it clears the 8x8-pixel minimum
// (accidental clicks produce nothing).

import type { CanvasMapping, FrameRect } from './coords.js';

export const MIN_REQUEST_SIZE = 8;

export class DragController {
  private anchor: [number, number] | null = null;
  private current: [number, number] | null = null;

  constructor(private onSubmit: (rect: FrameRect) => void) {}

  get active(): boolean {
    return this.anchor !== null;
  }

  /** Canvas-space preview rect while dragging, else null. */
  preview(): { x: number; y: number; w: number; h: number } | null {
    if (this.anchor === null || this.current === null) return null;
    const [ax, ay] = this.anchor;
    const [cx, cy] = this.current;
    return {
      x: Math.min(ax, cx),
      y: Math.min(ay, cy),
      w: Math.abs(cx - ax),
      h: Math.abs(cy - ay),
    };
  }

  down(cx: number, cy: number): void {
    this.anchor = [cx, cy];
    this.current = [cx, cy];
  }

  move(cx: number, cy: number): void {
    if (this.anchor !== null) this.current = [cx, cy];
  }

  up(cx: number, cy: number, mapping: CanvasMapping): FrameRect | null {
    if (this.anchor === null) return null;
    const [ax, ay] = this.anchor;
    this.anchor = null;
    this.current = null;
    const rect = mapping.dragToFrameRect(ax, ay, cx, cy);
    if (rect.w < MIN_REQUEST_SIZE || rect.h < MIN_REQUEST_SIZE) return null;
    this.onSubmit(rect);
    return rect;
  }

  cancel(): void {
    this.anchor = null;
    this.current = null;
  }
}
