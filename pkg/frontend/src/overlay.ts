// Overlay model: what gets drawn on top of the composited frame.
//
// Kept separate from the canvas so the styling rules are testable: one style
// for algorithmic RoIs, another for operator-requested ones, labeled boxes
// for detector outputs, plus the live drag preview.

import type { FrameMessage } from './messages.js';
import type { FrameRect } from './coords.js';
import type { RequestStore } from './requests.js';

export type OverlayStyle = 'roi-algorithmic' | 'roi-operator' | 'detection' | 'drag-preview';

export interface OverlayShape {
  rect: FrameRect;
  style: OverlayStyle;
  label?: string;
}

export const STYLE_COLORS: Record<OverlayStyle, string> = {
  'roi-algorithmic': '#37d67a',
  'roi-operator': '#ffb020',
  detection: '#ff5a5a',
  'drag-preview': '#8ab4ff',
};

export function buildOverlay(frame: FrameMessage, requests?: RequestStore): OverlayShape[] {
  const shapes: OverlayShape[] = [];
  for (const roi of frame.rois) {
    const rect = { x: roi.x, y: roi.y, w: roi.w, h: roi.h };
    if (roi.origin === 'operator') {
      const requestId = requests?.requestIdForRoi(rect) ?? null;
      shapes.push({
        rect,
        style: 'roi-operator',
        label: requestId !== null ? `req #${requestId}` : 'operator',
      });
    } else {
      shapes.push({ rect, style: 'roi-algorithmic' });
    }
  }
  for (const det of frame.detections) {
    shapes.push({
      rect: { x: det.x, y: det.y, w: det.w, h: det.h },
      style: 'detection',
      label: det.score === null ? undefined : det.score.toFixed(2),
    });
  }
  return shapes;
}
