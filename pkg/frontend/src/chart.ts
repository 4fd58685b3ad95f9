/**
 * Chart layout: turns plot series into a backend-neutral display list that
 * the SVG writer and the PNG rasterizer both consume.
 */

import {
  AXIS_COLOR,
  BACKGROUND,
  FONT_SIZE,
  GRID_COLOR,
  HEIGHT,
  MARGIN,
  PALETTE,
  TITLE_SIZE,
  WIDTH,
} from "./styles.js";

export type Primitive =
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: string; opacity?: number }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; color: string; width: number; opacity?: number }
  | { kind: "polyline"; points: Array<[number, number]>; color: string; width: number; opacity?: number }
  | { kind: "circle"; cx: number; cy: number; r: number; fill: string; opacity?: number }
  | {
      kind: "text";
      x: number;
      y: number;
      text: string;
      size: number;
      color: string;
      anchor: "start" | "middle" | "end";
    };

export interface DisplayList {
  width: number;
  height: number;
  primitives: Primitive[];
}

export interface PlotSeries {
  label: string;
  x: number[];
  y: number[];
  width?: number;
  opacity?: number;
  markers?: boolean;
  color?: string;
  legend?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: PlotSeries[];
}

interface Scale {
  min: number;
  max: number;
  toPixel(v: number): number;
}

function niceTicks(min: number, max: number, target = 6): number[] {
  if (max === min) {
    max = min + 1;
  }
  const span = max - min;
  const step0 = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= step0) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  for (let t = Math.ceil(min / step) * step; t <= max + step * 1e-9; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return ticks;
}

function formatTick(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e5 || magnitude < 1e-3) return value.toExponential(1);
  const text = value.toFixed(3);
  return text.replace(/\.?0+$/, "");
}

function makeScale(values: number[], lo: number, hi: number, padFraction: number): Scale {
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const pad = (max - min) * padFraction;
  min -= pad;
  max += pad;
  return {
    min,
    max,
    toPixel: (v) => lo + ((v - min) / (max - min)) * (hi - lo),
  };
}

/** Lay out axes, gridlines, series and legend into drawing primitives. */
export function layoutChart(spec: ChartSpec): DisplayList {
  const prims: Primitive[] = [];
  const plotLeft = MARGIN.left;
  const plotRight = WIDTH - MARGIN.right;
  const plotTop = MARGIN.top;
  const plotBottom = HEIGHT - MARGIN.bottom;

  prims.push({ kind: "rect", x: 0, y: 0, w: WIDTH, h: HEIGHT, fill: BACKGROUND });

  const allX = spec.series.flatMap((s) => s.x);
  const allY = spec.series.flatMap((s) => s.y);
  if (allX.length === 0) {
    throw new Error("chart has no points");
  }
  const xScale = makeScale(allX, plotLeft, plotRight, 0.04);
  const yScale = makeScale(allY, plotBottom, plotTop, 0.08);

  for (const t of niceTicks(xScale.min, xScale.max)) {
    const px = xScale.toPixel(t);
    if (px < plotLeft - 0.5 || px > plotRight + 0.5) continue;
    prims.push({ kind: "line", x1: px, y1: plotTop, x2: px, y2: plotBottom, color: GRID_COLOR, width: 1 });
    prims.push({ kind: "text", x: px, y: plotBottom + 16, text: formatTick(t), size: FONT_SIZE, color: AXIS_COLOR, anchor: "middle" });
  }
  for (const t of niceTicks(yScale.max, yScale.min)) {
    const py = yScale.toPixel(t);
    if (py < plotTop - 0.5 || py > plotBottom + 0.5) continue;
    prims.push({ kind: "line", x1: plotLeft, y1: py, x2: plotRight, y2: py, color: GRID_COLOR, width: 1 });
    prims.push({ kind: "text", x: plotLeft - 6, y: py + 4, text: formatTick(t), size: FONT_SIZE, color: AXIS_COLOR, anchor: "end" });
  }

  prims.push({ kind: "line", x1: plotLeft, y1: plotBottom, x2: plotRight, y2: plotBottom, color: AXIS_COLOR, width: 1.5 });
  prims.push({ kind: "line", x1: plotLeft, y1: plotTop, x2: plotLeft, y2: plotBottom, color: AXIS_COLOR, width: 1.5 });

  let colorIndex = 0;
  const legendEntries: Array<{ label: string; color: string }> = [];
  for (const s of spec.series) {
    const color = s.color ?? PALETTE[colorIndex++ % PALETTE.length];
    const points: Array<[number, number]> = s.x.map((x, i) => [
      xScale.toPixel(x),
      yScale.toPixel(s.y[i]),
    ]);
    prims.push({
      kind: "polyline",
      points,
      color,
      width: s.width ?? 2,
      opacity: s.opacity,
    });
    if (s.markers) {
      for (const [px, py] of points) {
        prims.push({ kind: "circle", cx: px, cy: py, r: 3, fill: color, opacity: s.opacity });
      }
    }
    if (s.legend !== false) {
      legendEntries.push({ label: s.label, color });
    }
  }

  let ly = plotTop + 10;
  for (const entry of legendEntries) {
    const lx = plotRight - 170;
    prims.push({ kind: "line", x1: lx, y1: ly - 4, x2: lx + 22, y2: ly - 4, color: entry.color, width: 3 });
    prims.push({ kind: "text", x: lx + 28, y: ly, text: entry.label, size: FONT_SIZE, color: AXIS_COLOR, anchor: "start" });
    ly += 18;
  }

  prims.push({ kind: "text", x: (plotLeft + plotRight) / 2, y: plotTop - 10, text: spec.title, size: TITLE_SIZE, color: AXIS_COLOR, anchor: "middle" });
  prims.push({ kind: "text", x: (plotLeft + plotRight) / 2, y: HEIGHT - 14, text: spec.xLabel, size: FONT_SIZE, color: AXIS_COLOR, anchor: "middle" });
  prims.push({ kind: "text", x: 16, y: plotTop - 10, text: spec.yLabel, size: FONT_SIZE, color: AXIS_COLOR, anchor: "start" });

  return { width: WIDTH, height: HEIGHT, primitives: prims };
}
