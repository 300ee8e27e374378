// Message schema for the ground-station WebSocket bridge.

export interface RoiRect {
  x: number;
  y: number;
  w: number;
  h: number;
  origin: 'algorithmic' | 'operator';
}

export interface Detection {
  x: number;
  y: number;
  w: number;
  h: number;
  score: number | null;
}

export interface FrameMessage {
  type: 'frame';
  frame_id: number;
  timestamp_us: number;
  width: number;
  height: number;
  png_b64?: string;
  rois: RoiRect[];
  detections: Detection[];
}

export interface AckMessage {
  type: 'ack';
  request_id: number;
  code: number;
  code_name: string;
}

export type ServerMessage = FrameMessage | AckMessage;

export interface RequestMessage {
  type: 'request';
  request_id: number;
  x: number;
  y: number;
  w: number;
  h: number;
  persistent: boolean;
}

export interface CancelMessage {
  type: 'cancel';
  request_id: number;
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === 'number' && Number.isFinite(v);
}

/** Parse one server message; returns null for anything malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== 'object' || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (msg.type === 'ack') {
    if (!isFiniteNumber(msg.request_id) || !isFiniteNumber(msg.code)) return null;
    return {
      type: 'ack',
      request_id: msg.request_id,
      code: msg.code,
      code_name: typeof msg.code_name === 'string' ? msg.code_name : `code ${msg.code}`,
    };
  }
  if (msg.type === 'frame') {
    if (
      !isFiniteNumber(msg.frame_id) ||
      !isFiniteNumber(msg.width) ||
      !isFiniteNumber(msg.height)
    ) {
      return null;
    }
    const rois: RoiRect[] = [];
    for (const entry of Array.isArray(msg.rois) ? msg.rois : []) {
      const r = entry as Record<string, unknown>;
      if (![r.x, r.y, r.w, r.h].every(isFiniteNumber)) return null;
      rois.push({
        x: r.x as number,
        y: r.y as number,
        w: r.w as number,
        h: r.h as number,
        origin: r.origin === 'operator' ? 'operator' : 'algorithmic',
      });
    }
    const detections: Detection[] = [];
    for (const entry of Array.isArray(msg.detections) ? msg.detections : []) {
      const d = entry as Record<string, unknown>;
      if (![d.x, d.y, d.w, d.h].every(isFiniteNumber)) return null;
      detections.push({
        x: d.x as number,
        y: d.y as number,
        w: d.w as number,
        h: d.h as number,
        score: isFiniteNumber(d.score) ? d.score : null,
      });
    }
    return {
      type: 'frame',
      frame_id: msg.frame_id,
      timestamp_us: isFiniteNumber(msg.timestamp_us) ? msg.timestamp_us : 0,
      width: msg.width,
      height: msg.height,
      png_b64: typeof msg.png_b64 === 'string' ? msg.png_b64 : undefined,
      rois,
      detections,
    };
  }
  return null;
}
