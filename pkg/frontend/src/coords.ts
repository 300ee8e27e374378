// Canvas <-> frame coordinate mapping.
//
// frameToCanvas is the forward map (real-valued canvas position of a frame
// pixel); canvasToFrame rounds back to the nearest integer frame pixel, so
// the round trip is exact for every integer frame position.

export interface FrameRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export class CanvasMapping {
  readonly scale: number;

  constructor(
    readonly frameWidth: number,
    readonly frameHeight: number,
    readonly canvasWidth: number,
    readonly canvasHeight: number,
  ) {
    if (frameWidth < 1 || frameHeight < 1 || canvasWidth < 1 || canvasHeight < 1) {
      throw new Error('mapping needs positive dimensions');
    }
    this.scale = Math.min(canvasWidth / frameWidth, canvasHeight / frameHeight);
  }

  frameToCanvas(fx: number, fy: number): [number, number] {
    return [fx * this.scale, fy * this.scale];
  }

  canvasToFrame(cx: number, cy: number): [number, number] {
    const fx = Math.round(cx / this.scale);
    const fy = Math.round(cy / this.scale);
    return [
      Math.max(0, Math.min(fx, this.frameWidth)),
      Math.max(0, Math.min(fy, this.frameHeight)),
    ];
  }

  /** Canvas-space drag corners -> integer frame rect, clipped to the frame. */
  dragToFrameRect(x0: number, y0: number, x1: number, y1: number): FrameRect {
    const [fx0, fy0] = this.canvasToFrame(Math.min(x0, x1), Math.min(y0, y1));
    const [fx1, fy1] = this.canvasToFrame(Math.max(x0, x1), Math.max(y0, y1));
    return { x: fx0, y: fy0, w: fx1 - fx0, h: fy1 - fy0 };
  }
}
