/** Canvas glue: blits the base image layer plus the overlay raster produced
 * by the pure render core, and translates pointer gestures (zoom, pan, ROI
 * drag) into image-space coordinates for the store.
 */

import type { Rect } from "./api.js";
import type { Store } from "./state.js";
import {
  dragToRect,
  fitViewport,
  identityViewport,
  imageToScreen,
  panBy,
  zoomAt,
  type Viewport,
} from "./viewport.js";

export class PageCanvas {
  viewport: Viewport = identityViewport();
  private overlayCanvas: HTMLCanvasElement;
  private baseImage: HTMLImageElement | null = null;
  private baseUrl = "";
  private drag: { kind: "roi" | "pan"; startX: number; startY: number; lastX: number; lastY: number } | null =
    null;
  private liveRect: Rect | null = null;
  private fitted = false;

  constructor(
    private canvas: HTMLCanvasElement,
    private store: Store,
    private onRoi: (rect: Rect) => void,
  ) {
    this.overlayCanvas = document.createElement("canvas");
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
    canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
    window.addEventListener("keydown", (e) => {
      if (e.key === "Escape") this.cancelDrag();
    });
  }

  setBaseUrl(url: string): void {
    if (url === this.baseUrl && this.baseImage) return;
    this.baseUrl = url;
    if (!url) {
      this.baseImage = null;
      this.redraw();
      return;
    }
    const img = new Image();
    img.onload = () => {
      this.baseImage = img;
      if (!this.fitted) {
        this.viewport = fitViewport(img.width, img.height, this.canvas.width, this.canvas.height);
        this.fitted = true;
      }
      this.redraw();
    };
    img.src = url + (url.includes("?") ? "&" : "?") + "t=" + Date.now(); // bypass stale cache
  }

  redraw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.fillStyle = "#20242b";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.imageSmoothingEnabled = false;
    const v = this.viewport;
    if (this.baseImage) {
      ctx.drawImage(
        this.baseImage,
        v.offsetX,
        v.offsetY,
        this.baseImage.width * v.scale,
        this.baseImage.height * v.scale,
      );
    }
    const overlay = this.store.renderPreview();
    if (overlay.width > 0 && overlay.height > 0) {
      this.overlayCanvas.width = overlay.width;
      this.overlayCanvas.height = overlay.height;
      const octx = this.overlayCanvas.getContext("2d");
      if (octx) {
        // opaque blit: a labeled pixel shows the label color itself
        const pixels = new Uint8ClampedArray(overlay.data);
        octx.putImageData(new ImageData(pixels, overlay.width, overlay.height), 0, 0);
        ctx.drawImage(this.overlayCanvas, v.offsetX, v.offsetY, overlay.width * v.scale, overlay.height * v.scale);
      }
    }
    const rect = this.liveRect ?? this.store.pendingRect;
    if (rect) {
      const [x0, y0] = imageToScreen(v, rect[0], rect[1]);
      ctx.strokeStyle = "#ffd700";
      ctx.setLineDash([6, 4]);
      ctx.lineWidth = 1.5;
      ctx.strokeRect(x0, y0, rect[2] * v.scale, rect[3] * v.scale);
      ctx.setLineDash([]);
    }
  }

  private local(e: PointerEvent | WheelEvent): [number, number] {
    const box = this.canvas.getBoundingClientRect();
    return [e.clientX - box.left, e.clientY - box.top];
  }

  private pointerDown(e: PointerEvent): void {
    const [x, y] = this.local(e);
    const roiMode = this.store.mode === "AnnotateRoi" && e.button === 0 && !e.shiftKey;
    this.drag = { kind: roiMode ? "roi" : "pan", startX: x, startY: y, lastX: x, lastY: y };
    this.canvas.setPointerCapture(e.pointerId);
  }

  private pointerMove(e: PointerEvent): void {
    if (!this.drag) return;
    const [x, y] = this.local(e);
    if (this.drag.kind === "pan") {
      this.viewport = panBy(this.viewport, x - this.drag.lastX, y - this.drag.lastY);
    } else {
      const size = this.pageSize();
      this.liveRect = dragToRect(this.viewport, this.drag.startX, this.drag.startY, x, y, size[0], size[1]);
    }
    this.drag.lastX = x;
    this.drag.lastY = y;
    this.redraw();
  }

  private pointerUp(e: PointerEvent): void {
    if (!this.drag) return;
    const kind = this.drag.kind;
    this.drag = null;
    this.canvas.releasePointerCapture(e.pointerId);
    if (kind === "roi") {
      const rect = this.liveRect;
      this.liveRect = null;
      if (rect) this.onRoi(rect);
      else this.redraw();
    }
  }

  cancelDrag(): void {
    this.drag = null;
    this.liveRect = null;
    this.store.cancelRoi();
    this.redraw();
  }

  private wheel(e: WheelEvent): void {
    e.preventDefault();
    const [x, y] = this.local(e);
    this.viewport = zoomAt(this.viewport, e.deltaY < 0 ? 1.2 : 1 / 1.2, x, y);
    this.redraw();
  }

  private pageSize(): [number, number] {
    return [this.store.summary?.width ?? 0, this.store.summary?.height ?? 0];
  }
}
