// Canvas painting behind a minimal 2D-context interface so tests can record
// draw calls without a real canvas.

import type { CanvasMapping } from './coords.js';
import type { OverlayShape } from './overlay.js';
import { STYLE_COLORS } from './overlay.js';

export interface Context2DLike {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  drawImage(image: unknown, dx: number, dy: number, dw: number, dh: number): void;
}

export interface RenderedFrame {
  image: unknown | null; // decoded bitmap; null when the PNG failed to decode
  overlay: OverlayShape[];
  frameId: number;
  timestampUs: number;
}

export function render(ctx: Context2DLike, frame: RenderedFrame, mapping: CanvasMapping): void {
  const [w, h] = mapping.frameToCanvas(mapping.frameWidth, mapping.frameHeight);
  ctx.clearRect(0, 0, mapping.canvasWidth, mapping.canvasHeight);
  if (frame.image !== null) {
    ctx.drawImage(frame.image, 0, 0, w, h);
  } else {
    ctx.fillStyle = '#803030';
    ctx.font = '14px monospace';
    ctx.fillText(`frame ${frame.frameId}: image decode failed, skipped`, 8, 20);
  }
  for (const shape of frame.overlay) {
    const [x, y] = mapping.frameToCanvas(shape.rect.x, shape.rect.y);
    const [x1, y1] = mapping.frameToCanvas(shape.rect.x + shape.rect.w, shape.rect.y + shape.rect.h);
    ctx.strokeStyle = STYLE_COLORS[shape.style];
    ctx.lineWidth = shape.style === 'roi-operator' ? 3 : 2;
    ctx.strokeRect(x, y, x1 - x, y1 - y);
    if (shape.label) {
      ctx.fillStyle = STYLE_COLORS[shape.style];
      ctx.font = '12px monospace';
      ctx.fillText(shape.label, x + 2, Math.max(10, y - 3));
    }
  }
  ctx.fillStyle = '#e8e8e8';
  ctx.font = '12px monospace';
  ctx.fillText(
    `frame ${frame.frameId}  t=${(frame.timestampUs / 1e6).toFixed(3)}s`,
    8,
    mapping.canvasHeight - 8,
  );
}
