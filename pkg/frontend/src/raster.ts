/**
 * Software rasterizer for the display list: enough of a renderer (filled
 * rects, Bresenham polylines with thickness, bitmap text, discs) to draw
 * the charts into an RGBA buffer for PNG output.
 */

import { DisplayList, Primitive } from "./chart.js";
import { FONT, GLYPH_HEIGHT, GLYPH_WIDTH, MISSING_GLYPH } from "./font5x7.js";

export interface Raster {
  width: number;
  height: number;
  pixels: Uint8Array; // RGBA rows, top to bottom
}

function parseColor(color: string): [number, number, number] {
  const m = /^#([0-9a-fA-F]{6})$/.exec(color);
  if (!m) throw new Error(`unsupported color '${color}'`);
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

function blend(raster: Raster, x: number, y: number, rgb: [number, number, number], alpha: number): void {
  if (x < 0 || y < 0 || x >= raster.width || y >= raster.height) return;
  const i = (y * raster.width + x) * 4;
  const p = raster.pixels;
  p[i] = Math.round(rgb[0] * alpha + p[i] * (1 - alpha));
  p[i + 1] = Math.round(rgb[1] * alpha + p[i + 1] * (1 - alpha));
  p[i + 2] = Math.round(rgb[2] * alpha + p[i + 2] * (1 - alpha));
  p[i + 3] = 255;
}

function stamp(raster: Raster, cx: number, cy: number, radius: number, rgb: [number, number, number], alpha: number): void {
  for (let dy = -radius; dy <= radius; dy++) {
    for (let dx = -radius; dx <= radius; dx++) {
      blend(raster, cx + dx, cy + dy, rgb, alpha);
    }
  }
}

function drawSegment(
  raster: Raster,
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  rgb: [number, number, number],
  width: number,
  alpha: number,
): void {
  let x = Math.round(x1);
  let y = Math.round(y1);
  const ex = Math.round(x2);
  const ey = Math.round(y2);
  const dx = Math.abs(ex - x);
  const dy = -Math.abs(ey - y);
  const sx = x < ex ? 1 : -1;
  const sy = y < ey ? 1 : -1;
  let err = dx + dy;
  const radius = Math.max(0, Math.round(width / 2) - (width <= 2 ? 1 : 0));
  for (;;) {
    if (radius > 0) stamp(raster, x, y, radius, rgb, alpha);
    else blend(raster, x, y, rgb, alpha);
    if (x === ex && y === ey) break;
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

function drawText(
  raster: Raster,
  text: string,
  x: number,
  y: number,
  size: number,
  rgb: [number, number, number],
  anchor: "start" | "middle" | "end",
): void {
  const scale = Math.max(1, Math.round(size / 8));
  const advance = (GLYPH_WIDTH + 1) * scale;
  const totalWidth = text.length * advance - scale;
  let penX = Math.round(x);
  if (anchor === "middle") penX -= Math.round(totalWidth / 2);
  if (anchor === "end") penX -= totalWidth;
  const top = Math.round(y) - GLYPH_HEIGHT * scale; // y is the text baseline
  for (const ch of text) {
    const glyph = FONT[ch] ?? MISSING_GLYPH;
    for (let col = 0; col < GLYPH_WIDTH; col++) {
      const bits = glyph[col];
      for (let row = 0; row < GLYPH_HEIGHT; row++) {
        if ((bits >> row) & 1) {
          for (let sy = 0; sy < scale; sy++) {
            for (let sx = 0; sx < scale; sx++) {
              blend(raster, penX + col * scale + sx, top + row * scale + sy, rgb, 1.0);
            }
          }
        }
      }
    }
    penX += advance;
  }
}

function drawPrimitive(raster: Raster, p: Primitive): void {
  const alpha = "opacity" in p && p.opacity !== undefined ? p.opacity : 1.0;
  switch (p.kind) {
    case "rect": {
      const rgb = parseColor(p.fill);
      for (let y = Math.round(p.y); y < Math.round(p.y + p.h); y++) {
        for (let x = Math.round(p.x); x < Math.round(p.x + p.w); x++) {
          blend(raster, x, y, rgb, alpha);
        }
      }
      break;
    }
    case "line":
      drawSegment(raster, p.x1, p.y1, p.x2, p.y2, parseColor(p.color), p.width, alpha);
      break;
    case "polyline": {
      const rgb = parseColor(p.color);
      for (let i = 1; i < p.points.length; i++) {
        drawSegment(
          raster,
          p.points[i - 1][0],
          p.points[i - 1][1],
          p.points[i][0],
          p.points[i][1],
          rgb,
          p.width,
          alpha,
        );
      }
      break;
    }
    case "circle": {
      const rgb = parseColor(p.fill);
      const r = Math.round(p.r);
      const cx = Math.round(p.cx);
      const cy = Math.round(p.cy);
      for (let dy = -r; dy <= r; dy++) {
        for (let dx = -r; dx <= r; dx++) {
          if (dx * dx + dy * dy <= r * r) blend(raster, cx + dx, cy + dy, rgb, alpha);
        }
      }
      break;
    }
    case "text":
      drawText(raster, p.text, p.x, p.y, p.size, parseColor(p.color), p.anchor);
      break;
  }
}

export function rasterize(list: DisplayList): Raster {
  const raster: Raster = {
    width: list.width,
    height: list.height,
    pixels: new Uint8Array(list.width * list.height * 4),
  };
  raster.pixels.fill(255);
  for (const p of list.primitives) drawPrimitive(raster, p);
  return raster;
}
