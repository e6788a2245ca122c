/** Pure pixel/projection helpers for the view panes.
 *
 * Everything here is presentation: colormaps over server-sent arrays and
 * plotting of server-sent poses.  No simulation state lives in this module.
 */

import { CLASS_COLORS, CLASS_NAMES } from "./protocol.js";

/** RGB stops for the depth colormap, near -> far. */
const DEPTH_STOPS: ReadonlyArray<readonly [number, number, number]> = [
  [253, 231, 37],  // near: yellow
  [94, 201, 98],
  [33, 145, 140],
  [59, 82, 139],
  [68, 1, 84],     // far: deep violet
];

/** Map one depth value in [0, maxRange] to RGB via the stop gradient. */
export function depthColor(value: number, maxRange: number): [number, number, number] {
  const t = Math.min(Math.max(value / maxRange, 0), 1);
  const pos = t * (DEPTH_STOPS.length - 1);
  const lo = Math.min(Math.floor(pos), DEPTH_STOPS.length - 2);
  const f = pos - lo;
  const a = DEPTH_STOPS[lo];
  const b = DEPTH_STOPS[lo + 1];
  return [
    Math.round(a[0] + (b[0] - a[0]) * f),
    Math.round(a[1] + (b[1] - a[1]) * f),
    Math.round(a[2] + (b[2] - a[2]) * f),
  ];
}

/** f32 z-depth frame -> RGBA pixels. */
export function depthToRgba(depth: Float32Array, maxRange: number): Uint8ClampedArray {
  const out = new Uint8ClampedArray(depth.length * 4);
  for (let i = 0; i < depth.length; i++) {
    const [r, g, b] = depthColor(depth[i], maxRange);
    out[i * 4] = r;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = b;
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** u8 class-id frame -> RGBA pixels via the class palette. */
export function segToRgba(seg: Uint8Array): Uint8ClampedArray {
  const out = new Uint8ClampedArray(seg.length * 4);
  for (let i = 0; i < seg.length; i++) {
    const c = CLASS_COLORS[seg[i]] ?? [255, 0, 255];
    out[i * 4] = c[0];
    out[i * 4 + 1] = c[1];
    out[i * 4 + 2] = c[2];
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** u8 RGB frame -> RGBA pixels. */
export function colorToRgba(rgb: Uint8Array): Uint8ClampedArray {
  const n = rgb.length / 3;
  const out = new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    out[i * 4] = rgb[i * 3];
    out[i * 4 + 1] = rgb[i * 3 + 1];
    out[i * 4 + 2] = rgb[i * 3 + 2];
    out[i * 4 + 3] = 255;
  }
  return out;
}

export interface LegendEntry {
  id: number;
  name: string;
  color: readonly [number, number, number];
}

/** Classes present in a segmentation frame, ascending id, for the legend. */
export function legendEntries(seg: Uint8Array): LegendEntry[] {
  const present = new Set<number>();
  for (let i = 0; i < seg.length; i++) present.add(seg[i]);
  return [...present].sort((a, b) => a - b).map((id) => ({
    id,
    name: CLASS_NAMES[id] ?? `class ${id}`,
    color: CLASS_COLORS[id] ?? [255, 0, 255],
  }));
}

// -- explored-map projection --------------------------------------------------

export interface Extent {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Bounding box of the trail with symmetric padding (metres). */
export function trailExtent(trail: ReadonlyArray<readonly [number, number, number]>,
                            pad = 2.0): Extent {
  let x0 = Infinity, y0 = Infinity, x1 = -Infinity, y1 = -Infinity;
  for (const [x, y] of trail) {
    x0 = Math.min(x0, x);
    y0 = Math.min(y0, y);
    x1 = Math.max(x1, x);
    y1 = Math.max(y1, y);
  }
  if (!isFinite(x0)) return { x0: 0, y0: 0, x1: 1, y1: 1 };
  return { x0: x0 - pad, y0: y0 - pad, x1: x1 + pad, y1: y1 + pad };
}

/**
 * World point -> pixel in a size x size map, preserving aspect (the larger
 * extent side fills the map) and flipping y so +y is up on screen.
 */
export function projectPoint(x: number, y: number, extent: Extent,
                             size: number): [number, number] {
  const span = Math.max(extent.x1 - extent.x0, extent.y1 - extent.y0);
  const cx = (extent.x0 + extent.x1) / 2;
  const cy = (extent.y0 + extent.y1) / 2;
  const scale = size / span;
  return [
    (x - cx) * scale + size / 2,
    size / 2 - (y - cy) * scale,
  ];
}

/** Pixels per metre used by projectPoint for the same extent/size. */
export function projectScale(extent: Extent, size: number): number {
  return size / Math.max(extent.x1 - extent.x0, extent.y1 - extent.y0);
}
