import { describe, expect, it } from 'vitest';

import { FrameBuffer } from '../src/frameBuffer.js';
import { parseServerMessage, type FrameMessage } from '../src/messages.js';
import { buildOverlay } from '../src/overlay.js';
import { RequestStore } from '../src/requests.js';
import { DragController, MIN_REQUEST_SIZE } from '../src/drag.js';
import { CanvasMapping } from '../src/coords.js';
import { render, type Context2DLike } from '../src/render.js';

function frame(overrides: Partial<FrameMessage> = {}): FrameMessage {
  return {
    type: 'frame',
    frame_id: 1,
    timestamp_us: 100000,
    width: 64,
    height: 64,
    rois: [],
    detections: [],
    ...overrides,
  };
}

describe('FrameBuffer', () => {
  it('is newest-wins and never queues', () => {
    const buf = new FrameBuffer();
    buf.push(frame({ frame_id: 1 }));
    buf.push(frame({ frame_id: 2 }));
    buf.push(frame({ frame_id: 3 }));
    expect(buf.take()?.frame_id).toBe(3);
    expect(buf.take()).toBeNull();
    expect(buf.dropped).toBe(2);
    expect(buf.received).toBe(3);
  });
});

describe('parseServerMessage', () => {
  it('parses frames and defaults origins', () => {
    const msg = parseServerMessage(
      JSON.stringify(
        frame({
          rois: [
            { x: 1, y: 2, w: 3, h: 4, origin: 'operator' },
            { x: 0, y: 0, w: 5, h: 5, origin: 'algorithmic' },
          ],
          detections: [{ x: 0, y: 0, w: 2, h: 2, score: 0.5 }],
        }),
      ),
    );
    expect(msg?.type).toBe('frame');
    if (msg?.type === 'frame') {
      expect(msg.rois[0].origin).toBe('operator');
      expect(msg.detections[0].score).toBe(0.5);
    }
  });

  it('returns null on garbage', () => {
    expect(parseServerMessage('{nope')).toBeNull();
    expect(parseServerMessage('{"type":"frame"}')).toBeNull();
    expect(parseServerMessage('{"type":"mystery"}')).toBeNull();
  });

  it('parses acks', () => {
    const msg = parseServerMessage(
      '{"type":"ack","request_id":7,"code":1,"code_name":"rejected_bounds"}',
    );
    expect(msg).toEqual({
      type: 'ack',
      request_id: 7,
      code: 1,
      code_name: 'rejected_bounds',
    });
  });
});

describe('RequestStore', () => {
  it('advances sent -> acked -> fulfilled in order', () => {
    const store = new RequestStore();
    store.add(1, { x: 2, y: 2, w: 10, h: 10 }, false);
    expect(store.get(1)?.state).toBe('sent');
    store.applyAck(1, 0, 'accepted');
    expect(store.get(1)?.state).toBe('acked');
    store.applyFrame(
      frame({ rois: [{ x: 2, y: 2, w: 10, h: 10, origin: 'operator' }] }),
    );
    expect(store.get(1)?.state).toBe('fulfilled');
  });

  it('never moves backwards', () => {
    const store = new RequestStore();
    store.add(1, { x: 0, y: 0, w: 8, h: 8 }, false);
    store.applyFrame(frame({ rois: [{ x: 0, y: 0, w: 8, h: 8, origin: 'operator' }] }));
    expect(store.get(1)?.state).toBe('fulfilled');
    store.applyAck(1, 0, 'accepted');
    expect(store.get(1)?.state).toBe('fulfilled');
  });

  it('rejection is terminal and keeps the reason', () => {
    const store = new RequestStore();
    store.add(2, { x: 0, y: 0, w: 8, h: 8 }, false);
    store.applyAck(2, 1, 'rejected_bounds');
    expect(store.get(2)?.state).toBe('rejected');
    expect(store.get(2)?.rejectReason).toBe('rejected_bounds');
    store.applyFrame(frame({ rois: [{ x: 0, y: 0, w: 8, h: 8, origin: 'operator' }] }));
    expect(store.get(2)?.state).toBe('rejected');
  });

  it('ignores algorithmic rois that happen to match', () => {
    const store = new RequestStore();
    store.add(3, { x: 0, y: 0, w: 8, h: 8 }, false);
    store.applyFrame(frame({ rois: [{ x: 0, y: 0, w: 8, h: 8, origin: 'algorithmic' }] }));
    expect(store.get(3)?.state).toBe('sent');
  });
});

describe('buildOverlay', () => {
  it('styles origins differently and labels detections with scores', () => {
    const shapes = buildOverlay(
      frame({
        rois: [
          { x: 0, y: 0, w: 10, h: 10, origin: 'algorithmic' },
          { x: 20, y: 20, w: 8, h: 8, origin: 'operator' },
        ],
        detections: [{ x: 1, y: 1, w: 4, h: 4, score: 0.87 }],
      }),
    );
    expect(shapes.map((s) => s.style)).toEqual([
      'roi-algorithmic',
      'roi-operator',
      'detection',
    ]);
    expect(shapes[2].label).toBe('0.87');
  });

  it('labels operator rois with their request id', () => {
    const store = new RequestStore();
    store.add(42, { x: 20, y: 20, w: 8, h: 8 }, false);
    const shapes = buildOverlay(
      frame({ rois: [{ x: 20, y: 20, w: 8, h: 8, origin: 'operator' }] }),
      store,
    );
    expect(shapes[0].label).toBe('req #42');
  });

  it('zero overlays for a bare frame', () => {
    expect(buildOverlay(frame())).toEqual([]);
  });
});

describe('DragController', () => {
  const mapping = new CanvasMapping(64, 64, 640, 640); // 10x scale

  it('submits the dragged rect in frame coordinates', () => {
    const submitted: unknown[] = [];
    const drag = new DragController((r) => submitted.push(r));
    drag.down(100, 100);
    drag.move(300, 250);
    expect(drag.preview()).toEqual({ x: 100, y: 100, w: 200, h: 150 });
    const rect = drag.up(300, 250, mapping);
    expect(rect).toEqual({ x: 10, y: 10, w: 20, h: 15 });
    expect(submitted).toEqual([rect]);
  });

  it('discards drags smaller than the minimum size', () => {
    const submitted: unknown[] = [];
    const drag = new DragController((r) => submitted.push(r));
    drag.down(100, 100);
    // 7 frame px < MIN_REQUEST_SIZE
    expect(drag.up(100 + (MIN_REQUEST_SIZE - 1) * 10, 200, mapping)).toBeNull();
    expect(submitted).toEqual([]);
  });

  it('clips out-of-bounds drags', () => {
    const drag = new DragController(() => undefined);
    drag.down(-200, -200);
    const rect = drag.up(100, 100, mapping);
    expect(rect).toEqual({ x: 0, y: 0, w: 10, h: 10 });
  });
});

class RecordingCtx implements Context2DLike {
  strokeStyle: string | CanvasGradient | CanvasPattern = '';
  fillStyle: string | CanvasGradient | CanvasPattern = '';
  lineWidth = 0;
  font = '';
  calls: Array<[string, ...unknown[]]> = [];
  clearRect(...args: number[]) { this.calls.push(['clearRect', ...args]); }
  strokeRect(...args: number[]) { this.calls.push(['strokeRect', this.strokeStyle, ...args]); }
  fillText(text: string, x: number, y: number) { this.calls.push(['fillText', text, x, y]); }
  drawImage(image: unknown, ...args: number[]) { this.calls.push(['drawImage', image, ...args]); }
}

describe('render', () => {
  const mapping = new CanvasMapping(64, 64, 640, 640);

  it('draws the image and overlay rects at mapped positions', () => {
    const ctx = new RecordingCtx();
    render(
      ctx,
      {
        image: 'bitmap',
        frameId: 5,
        timestampUs: 0,
        overlay: [{ rect: { x: 2, y: 3, w: 10, h: 10 }, style: 'roi-operator', label: 'req #1' }],
      },
      mapping,
    );
    expect(ctx.calls[0][0]).toBe('clearRect');
    expect(ctx.calls[1]).toEqual(['drawImage', 'bitmap', 0, 0, 640, 640]);
    const stroke = ctx.calls.find((c) => c[0] === 'strokeRect');
    expect(stroke).toEqual(['strokeRect', '#ffb020', 20, 30, 100, 100]);
    expect(ctx.calls.some((c) => c[0] === 'fillText' && c[1] === 'req #1')).toBe(true);
  });

  it('shows a skip notice when the image failed to decode', () => {
    const ctx = new RecordingCtx();
    render(ctx, { image: null, frameId: 9, timestampUs: 0, overlay: [] }, mapping);
    expect(ctx.calls.some((c) => c[0] === 'drawImage')).toBe(false);
    expect(
      ctx.calls.some((c) => c[0] === 'fillText' && String(c[1]).includes('decode failed')),
    ).toBe(true);
  });
});
