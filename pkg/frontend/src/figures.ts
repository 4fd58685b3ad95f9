/**
 * Figure analogs from the simulator's CSV outputs:
 *
 *   fig2  sum SE vs number of APs, one line per train speed   (sweep CSV)
 *   fig3  sum SE vs AP-track vertical distance, per speed     (sweep CSV)
 *   fig4  training convergence, raw faint + smoothed bold     (convergence CSVs)
 *   fig5  best sum SE vs rail span per algorithm              (sweep CSV)
 */

import { basename } from "node:path";

import { ChartSpec, DisplayList, layoutChart, PlotSeries } from "./chart.js";
import { parseCsv, requireColumns, SchemaError, Table } from "./csv.js";
import { groupedMeanSeries, sortSeriesByNumericLabel } from "./series.js";
import { PALETTE } from "./styles.js";

export const FIGURE_IDS = ["fig2", "fig3", "fig4", "fig5"] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

export const SWEEP_COLUMNS = [
  "scenario_id",
  "algorithm",
  "L",
  "K",
  "N",
  "d_s_over_lambda",
  "d_ve_m",
  "v_kmh",
  "d_ap_over_lambda",
  "seed",
  "sum_se_bps_hz",
  "evaluations",
  "wall_ms",
] as const;

export const CONVERGENCE_COLUMNS = ["episode", "reward_raw", "reward_smoothed", "lr"] as const;

export interface FigureJob {
  figId: FigureId;
  inputs: Array<{ name: string; text: string }>;
}

function speedSeries(table: Table, xCol: string): PlotSeries[] {
  const series = groupedMeanSeries(table, "v_kmh", xCol, "sum_se_bps_hz", (v) => `v = ${v} km/h`);
  return sortSeriesByNumericLabel(series).map((s) => ({ ...s, markers: true }));
}

function buildFig2(job: FigureJob): ChartSpec {
  const table = parseCsv(job.inputs[0].text);
  requireColumns(table, SWEEP_COLUMNS, "fig2");
  return {
    title: "Sum SE vs number of APs",
    xLabel: "number of APs L",
    yLabel: "sum SE (bit/s/Hz)",
    series: speedSeries(table, "L"),
  };
}

function buildFig3(job: FigureJob): ChartSpec {
  const table = parseCsv(job.inputs[0].text);
  requireColumns(table, SWEEP_COLUMNS, "fig3");
  return {
    title: "Sum SE vs vertical distance",
    xLabel: "vertical distance d_ve (m)",
    yLabel: "sum SE (bit/s/Hz)",
    series: speedSeries(table, "d_ve_m"),
  };
}

function buildFig4(job: FigureJob): ChartSpec {
  const series: PlotSeries[] = [];
  job.inputs.forEach((input, i) => {
    const table = parseCsv(input.text);
    requireColumns(table, CONVERGENCE_COLUMNS, "fig4");
    const episodes = table.rows.map((r) => Number(r.episode));
    const raw = table.rows.map((r) => Number(r.reward_raw));
    const smoothed = table.rows.map((r) => Number(r.reward_smoothed));
    const color = PALETTE[i % PALETTE.length];
    const label = basename(input.name).replace(/\.csv$/, "");
    series.push({ label, x: episodes, y: raw, color, opacity: 0.25, width: 1, legend: false });
    series.push({ label, x: episodes, y: smoothed, color, width: 2.5 });
  });
  return {
    title: "Training convergence",
    xLabel: "episode",
    yLabel: "sum SE (bit/s/Hz)",
    series,
  };
}

function buildFig5(job: FigureJob): ChartSpec {
  const table = parseCsv(job.inputs[0].text);
  requireColumns(table, SWEEP_COLUMNS, "fig5");
  const series = groupedMeanSeries(table, "algorithm", "d_ap_over_lambda", "sum_se_bps_hz", (a) => a);
  series.sort((a, b) => a.label.localeCompare(b.label));
  return {
    title: "Sum SE vs rail span per algorithm",
    xLabel: "rail span d_ap (wavelengths)",
    yLabel: "best sum SE (bit/s/Hz)",
    series: series.map((s) => ({ ...s, markers: true })),
  };
}

export function buildFigure(job: FigureJob): DisplayList {
  if (job.inputs.length === 0) {
    throw new SchemaError(`${job.figId}: needs at least one input CSV`);
  }
  switch (job.figId) {
    case "fig2":
      return layoutChart(buildFig2(job));
    case "fig3":
      return layoutChart(buildFig3(job));
    case "fig4":
      return layoutChart(buildFig4(job));
    case "fig5":
      return layoutChart(buildFig5(job));
    default:
      throw new SchemaError(`unknown figure id '${job.figId}'`);
  }
}
