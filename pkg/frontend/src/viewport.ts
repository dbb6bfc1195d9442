/** Zoom/pan transform between screen (canvas) and image coordinates,
 * plus ROI drag-rectangle normalization. Pure math, no DOM.
 */

import type { Rect } from "./api.js";

export interface Viewport {
  scale: number; // screen pixels per image pixel
  offsetX: number; // screen x of image pixel (0, 0)
  offsetY: number;
}

export function identityViewport(): Viewport {
  return { scale: 1, offsetX: 0, offsetY: 0 };
}

export function screenToImage(v: Viewport, sx: number, sy: number): [number, number] {
  return [(sx - v.offsetX) / v.scale, (sy - v.offsetY) / v.scale];
}

export function imageToScreen(v: Viewport, ix: number, iy: number): [number, number] {
  return [ix * v.scale + v.offsetX, iy * v.scale + v.offsetY];
}

/** Zoom by `factor` keeping the screen point (sx, sy) fixed. */
export function zoomAt(v: Viewport, factor: number, sx: number, sy: number): Viewport {
  const scale = Math.min(32, Math.max(1 / 32, v.scale * factor));
  const ratio = scale / v.scale;
  return {
    scale,
    offsetX: sx - (sx - v.offsetX) * ratio,
    offsetY: sy - (sy - v.offsetY) * ratio,
  };
}

export function panBy(v: Viewport, dx: number, dy: number): Viewport {
  return { scale: v.scale, offsetX: v.offsetX + dx, offsetY: v.offsetY + dy };
}

/** Viewport that fits a width x height image into a viewW x viewH screen. */
export function fitViewport(width: number, height: number, viewW: number, viewH: number): Viewport {
  const scale = Math.min(viewW / width, viewH / height) || 1;
  return {
    scale,
    offsetX: (viewW - width * scale) / 2,
    offsetY: (viewH - height * scale) / 2,
  };
}

/** Convert a drag between two screen points into an integer image-space
 * rectangle [x, y, w, h], normalized (w, h >= 0) and clipped to the page.
 * Returns null when the clipped rectangle is empty.
 */
export function dragToRect(
  v: Viewport,
  startX: number,
  startY: number,
  endX: number,
  endY: number,
  width: number,
  height: number,
): Rect | null {
  const [ax, ay] = screenToImage(v, startX, startY);
  const [bx, by] = screenToImage(v, endX, endY);
  let x0 = Math.floor(Math.min(ax, bx));
  let y0 = Math.floor(Math.min(ay, by));
  let x1 = Math.ceil(Math.max(ax, bx));
  let y1 = Math.ceil(Math.max(ay, by));
  x0 = Math.max(0, x0);
  y0 = Math.max(0, y0);
  x1 = Math.min(width, x1);
  y1 = Math.min(height, y1);
  if (x1 <= x0 || y1 <= y0) return null;
  return [x0, y0, x1 - x0, y1 - y0];
}

/** True when every vertex of the polygon lies inside the closed rectangle. */
export function polygonInsideRect(points: [number, number][], rect: Rect): boolean {
  const [rx, ry, rw, rh] = rect;
  for (const [x, y] of points) {
    if (x < rx || x > rx + rw || y < ry || y > ry + rh) return false;
  }
  return points.length > 0;
}
