/**
 * Figure assembly: read a samples.csv, build the requested series and emit
 * a deterministic SVG.
 */

import { readFileSync, writeFileSync } from "fs";

import { checkGroupColumns, parseSamplesCsv, SampleRow } from "./csv.js";
import { cdfSeries, Series, sweepSeries } from "./series.js";
import { renderChart } from "./svg.js";

export type FigureKind = "cdf" | "sweep-line";

export interface FigureSpec {
  input: string;
  kind: FigureKind;
  group: string[];
  output: string;
  title?: string;
}

export function buildSeries(
  rows: SampleRow[],
  kind: FigureKind,
  group: string[],
): Series[] {
  const columns = checkGroupColumns(group);
  return kind === "cdf" ? cdfSeries(rows, columns) : sweepSeries(rows, columns);
}

export function renderFigureSvg(spec: FigureSpec): string {
  const rows = parseSamplesCsv(readFileSync(spec.input, "utf-8"));
  const series = buildSeries(rows, spec.kind, spec.group);
  if (spec.kind === "cdf") {
    return renderChart(series, {
      title: spec.title ?? "Per-UE spectral efficiency CDF",
      xLabel: "SE (bit/s/Hz)",
      yLabel: "CDF",
    });
  }
  const sweepParam = rows[0].sweep_param;
  return renderChart(series, {
    title: spec.title ?? `Sum SE versus ${sweepParam}`,
    xLabel: sweepParam,
    yLabel: "sum SE (bit/s/Hz)",
  });
}

export function renderFigure(spec: FigureSpec): void {
  if (!spec.output.endsWith(".svg")) {
    throw new Error(
      `output must be an .svg path, got ${JSON.stringify(spec.output)}`,
    );
  }
  writeFileSync(spec.output, renderFigureSvg(spec));
}
