/** Grouping and aggregation helpers for turning result rows into series. */

import { numeric, Table } from "./csv.js";

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

/**
 * Mean of `yCol` over rows sharing (group, x), one series per group value,
 * with x ascending inside each series.
 */
export function groupedMeanSeries(
  table: Table,
  groupCol: string,
  xCol: string,
  yCol: string,
  labelFor: (group: string) => string,
): Series[] {
  const buckets = new Map<string, Map<number, number[]>>();
  for (const row of table.rows) {
    const group = row[groupCol];
    const x = numeric(row, xCol);
    const y = numeric(row, yCol);
    if (!buckets.has(group)) buckets.set(group, new Map());
    const byX = buckets.get(group)!;
    if (!byX.has(x)) byX.set(x, []);
    byX.get(x)!.push(y);
  }
  const out: Series[] = [];
  for (const [group, byX] of buckets) {
    const xs = [...byX.keys()].sort((a, b) => a - b);
    out.push({
      label: labelFor(group),
      x: xs,
      y: xs.map((x) => mean(byX.get(x)!)),
    });
  }
  return out;
}

export function mean(values: number[]): number {
  let sum = 0;
  for (const v of values) sum += v;
  return sum / values.length;
}

/** Trailing moving average with partial windows at the head. */
export function movingAverage(values: number[], window: number): number[] {
  const out: number[] = [];
  let sum = 0;
  for (let i = 0; i < values.length; i++) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out.push(sum / Math.min(i + 1, window));
  }
  return out;
}

export function sortSeriesByNumericLabel(series: Series[]): Series[] {
  return [...series].sort((a, b) => {
    const na = Number(a.label.replace(/[^\d.-]/g, ""));
    const nb = Number(b.label.replace(/[^\d.-]/g, ""));
    return na - nb;
  });
}
