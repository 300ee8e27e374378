// Operator console wiring: WebSocket client -> newest-wins buffer -> canvas,
// plus click-drag custom RoI requests and a pending-request panel.

import { GroundClient } from './client.js';
import { CanvasMapping } from './coords.js';
import { DragController } from './drag.js';
import { FrameBuffer } from './frameBuffer.js';
import type { FrameMessage } from './messages.js';
import { buildOverlay, STYLE_COLORS } from './overlay.js';
import { render, type Context2DLike } from './render.js';
import { RequestStore } from './requests.js';

export interface AppElements {
  canvas: HTMLCanvasElement;
  status: HTMLElement;
  pendingList: HTMLElement;
}

export class OperatorConsole {
  readonly buffer = new FrameBuffer();
  readonly requests = new RequestStore();
  readonly drag: DragController;
  private client: GroundClient;
  private mapping: CanvasMapping | null = null;
  private lastFrame: FrameMessage | null = null;
  private lastImage: { bitmap: unknown; frameId: number } | null = null;

  constructor(
    url: string,
    private el: AppElements,
    wsFactory?: ConstructorParameters<typeof GroundClient>[2],
  ) {
    this.drag = new DragController((rect) => {
      const msg = this.client.submitRequest(rect, false);
      this.requests.add(msg.request_id, rect, false);
      this.renderPendingList();
    });
    this.client = new GroundClient(
      url,
      {
        onFrame: (frame) => {
          this.requests.applyFrame(frame);
          this.buffer.push(frame);
        },
        onAck: (ack) => {
          this.requests.applyAck(ack.request_id, ack.code, ack.code_name);
          this.renderPendingList();
        },
        onOpen: () => (this.el.status.textContent = 'connected'),
        onClose: () => (this.el.status.textContent = 'disconnected'),
      },
      wsFactory,
    );
    this.attachPointerHandlers();
    this.scheduleRender();
  }

  private attachPointerHandlers(): void {
    const canvas = this.el.canvas;
    const pos = (ev: MouseEvent): [number, number] => {
      const rect = canvas.getBoundingClientRect();
      return [ev.clientX - rect.left, ev.clientY - rect.top];
    };
    canvas.addEventListener('mousedown', (ev) => this.drag.down(...pos(ev)));
    canvas.addEventListener('mousemove', (ev) => this.drag.move(...pos(ev)));
    canvas.addEventListener('mouseup', (ev) => {
      if (this.mapping) this.drag.up(...pos(ev), this.mapping);
      this.renderPendingList();
    });
    canvas.addEventListener('mouseleave', () => this.drag.cancel());
  }

  private scheduleRender(): void {
    const loop = () => {
      void this.renderOnce();
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  }

  async renderOnce(): Promise<void> {
    const frame = this.buffer.take() ?? this.lastFrame;
    if (frame === null) return;
    this.lastFrame = frame;
    this.mapping = new CanvasMapping(
      frame.width,
      frame.height,
      this.el.canvas.width,
      this.el.canvas.height,
    );
    if (frame.png_b64 && this.lastImage?.frameId !== frame.frame_id) {
      try {
        const bytes = Uint8Array.from(atob(frame.png_b64), (c) => c.charCodeAt(0));
        const bitmap = await createImageBitmap(new Blob([bytes], { type: 'image/png' }));
        this.lastImage = { bitmap, frameId: frame.frame_id };
      } catch {
        this.lastImage = null; // decode failure: frame skipped with notice
      }
    }
    const ctx = this.el.canvas.getContext('2d') as unknown as Context2DLike | null;
    if (!ctx) return;
    const overlay = buildOverlay(frame, this.requests);
    render(
      ctx,
      {
        image: this.lastImage?.bitmap ?? null,
        overlay,
        frameId: frame.frame_id,
        timestampUs: frame.timestamp_us,
      },
      this.mapping,
    );
    const preview = this.drag.preview();
    if (preview && preview.w > 0 && preview.h > 0) {
      ctx.strokeStyle = STYLE_COLORS['drag-preview'];
      ctx.lineWidth = 1;
      ctx.strokeRect(preview.x, preview.y, preview.w, preview.h);
    }
  }

  renderPendingList(): void {
    const items = this.requests
      .list()
      .map((r) => {
        const reason = r.rejectReason ? ` (${r.rejectReason})` : '';
        return `<li class="state-${r.state}">#${r.requestId} ${r.rect.w}×${r.rect.h} @ (${r.rect.x},${r.rect.y}) - ${r.state}${reason}</li>`;
      })
      .join('');
    this.el.pendingList.innerHTML = items || '<li class="empty">no pending requests</li>';
  }
}

export function start(): void {
  const canvas = document.getElementById('view') as HTMLCanvasElement;
  const status = document.getElementById('status') as HTMLElement;
  const pendingList = document.getElementById('pending') as HTMLElement;
  const params = new URLSearchParams(window.location.search);
  const url = params.get('ws') ?? `ws://${window.location.hostname}:8765/ws`;
  new OperatorConsole(url, { canvas, status, pendingList });
}

if (typeof document !== 'undefined' && document.getElementById('view')) {
  start();
}
