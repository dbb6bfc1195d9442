/** Software raster used for the annotation overlay.
 *
 * The overlay is produced as a plain RGBA buffer by pure functions so the
 * exact pixels the user sees can be asserted in tests without a browser
 * canvas; the DOM layer only blits the buffer via putImageData.
 */

import type { LabelInfo, UnitInfo } from "./api.js";

export interface Raster {
  width: number;
  height: number;
  data: Uint8ClampedArray; // RGBA, length = width * height * 4
}

export type Rgba = [number, number, number, number];

export function makeRaster(width: number, height: number): Raster {
  return { width, height, data: new Uint8ClampedArray(width * height * 4) };
}

export function parseHexColor(hex: string): Rgba {
  const m = /^#([0-9a-fA-F]{6})$/.exec(hex);
  if (!m) throw new Error(`invalid color: ${hex}`);
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff, 255];
}

export function putPixel(r: Raster, x: number, y: number, c: Rgba): void {
  if (x < 0 || y < 0 || x >= r.width || y >= r.height) return;
  const i = (y * r.width + x) * 4;
  r.data[i] = c[0];
  r.data[i + 1] = c[1];
  r.data[i + 2] = c[2];
  r.data[i + 3] = c[3];
}

export function getPixel(r: Raster, x: number, y: number): Rgba {
  const i = (y * r.width + x) * 4;
  return [r.data[i], r.data[i + 1], r.data[i + 2], r.data[i + 3]];
}

/** Fill a polygon with even-odd parity, sampling at integer grid points.
 * Grid points lying exactly on an edge are included, matching the
 * service's notion that boundary pixels belong to the unit.
 */
export function fillPolygon(r: Raster, points: [number, number][], c: Rgba): void {
  const n = points.length;
  if (n === 0) return;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const [, y] of points) {
    if (y < minY) minY = y;
    if (y > maxY) maxY = y;
  }
  const y0 = Math.max(0, Math.ceil(minY));
  const y1 = Math.min(r.height - 1, Math.floor(maxY));
  for (let y = y0; y <= y1; y++) {
    const crossings: number[] = [];
    for (let e = 0; e < n; e++) {
      const [ax, ay] = points[e];
      const [bx, by] = points[(e + 1) % n];
      if (ay === by) continue;
      if (ay > y === by > y) continue; // half-open span: [min(ay,by), max(ay,by))
      crossings.push(ax + ((y - ay) * (bx - ax)) / (by - ay));
    }
    crossings.sort((a, b) => a - b);
    for (let k = 0; k + 1 < crossings.length; k += 2) {
      const xs = Math.max(0, Math.ceil(crossings[k]));
      const xe = Math.min(r.width - 1, Math.floor(crossings[k + 1]));
      const row = (y * r.width + xs) * 4;
      for (let x = xs, i = row; x <= xe; x++, i += 4) {
        r.data[i] = c[0];
        r.data[i + 1] = c[1];
        r.data[i + 2] = c[2];
        r.data[i + 3] = c[3];
      }
    }
  }
  strokePolygon(r, points, c); // boundary lattice points belong to the unit
}

/** Stroke the closed polygon outline one pixel wide (Bresenham). */
export function strokePolygon(r: Raster, points: [number, number][], c: Rgba): void {
  const n = points.length;
  if (n === 1) {
    putPixel(r, points[0][0], points[0][1], c);
    return;
  }
  for (let e = 0; e < n; e++) {
    const [ax, ay] = points[e];
    const [bx, by] = points[(e + 1) % n];
    drawLine(r, ax, ay, bx, by, c);
  }
}

function drawLine(r: Raster, x0: number, y0: number, x1: number, y1: number, c: Rgba): void {
  const dx = Math.abs(x1 - x0);
  const dy = -Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1;
  const sy = y0 < y1 ? 1 : -1;
  let err = dx + dy;
  let x = x0;
  let y = y0;
  for (;;) {
    putPixel(r, x, y, c);
    if (x === x1 && y === y1) return;
    const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

/** Deterministic bright color for an unlabeled unit, keyed by its id. */
export function unitColor(id: number): Rgba {
  const hue = (id * 137.508) % 360; // golden-angle spacing keeps neighbors distinct
  return hslToRgba(hue, 0.65, 0.55);
}

function hslToRgba(h: number, s: number, l: number): Rgba {
  const c = (1 - Math.abs(2 * l - 1)) * s;
  const hp = h / 60;
  const x = c * (1 - Math.abs((hp % 2) - 1));
  let rgb: [number, number, number];
  if (hp < 1) rgb = [c, x, 0];
  else if (hp < 2) rgb = [x, c, 0];
  else if (hp < 3) rgb = [0, c, x];
  else if (hp < 4) rgb = [0, x, c];
  else if (hp < 5) rgb = [x, 0, c];
  else rgb = [c, 0, x];
  const m = l - c / 2;
  return [Math.round((rgb[0] + m) * 255), Math.round((rgb[1] + m) * 255), Math.round((rgb[2] + m) * 255), 255];
}

export interface OverlayInput {
  width: number;
  height: number;
  units: UnitInfo[];
  labels: LabelInfo[];
  /** ids currently highlighted (ROI candidates, review offenders) */
  highlighted?: Set<number>;
  /** id of the unit the one-by-one prompt is focused on */
  focused?: number | null;
}

export const HIGHLIGHT: Rgba = [255, 215, 0, 255];
export const FOCUS: Rgba = [0, 162, 255, 255];

/** Render the annotation overlay: labeled units filled with their label's
 * exact service-reported color, unlabeled units in a per-unit color
 * (outline plus fill so ungrouped regions stay visible), highlights on top.
 */
export function renderOverlay(input: OverlayInput): Raster {
  const r = makeRaster(input.width, input.height);
  const colorOf = new Map<number, Rgba>();
  for (const lab of input.labels) colorOf.set(lab.index, parseHexColor(lab.color));
  for (const u of input.units) {
    const pts = u.polygon.points;
    if (u.label != null && colorOf.has(u.label)) {
      fillPolygon(r, pts, colorOf.get(u.label)!);
    } else {
      fillPolygon(r, pts, unitColor(u.id));
    }
  }
  if (input.highlighted) {
    for (const u of input.units) {
      if (input.highlighted.has(u.id)) strokePolygon(r, u.polygon.points, HIGHLIGHT);
    }
  }
  if (input.focused != null) {
    for (const u of input.units) {
      if (u.id === input.focused) strokePolygon(r, u.polygon.points, FOCUS);
    }
  }
  return r;
}
