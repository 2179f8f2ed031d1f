/** Orchestration: spec -> traces -> figure -> SVG + PNG files.
 *
 * This layer only reads CSVs and the manifest; it never recomputes
 * metrics, so it cannot paper over simulator-side bugs. */
import { writeFileSync } from "node:fs";
import path from "node:path";

import { buildFigure, PanelOptions, Series } from "./chart.js";
import { parseTrace, Trace } from "./csv.js";
import { toPng } from "./png.js";
import { expandGlob, PlotSpec, SpecError, traceLabels } from "./spec.js";
import { toSvg } from "./svg.js";

const METRIC_TITLES: Record<string, string> = {
  accuracy: "Accuracy",
  H: "Disagreement measure",
  grad_norm_sq: "Squared gradient norm",
  loss: "Loss",
};

export interface RenderResult {
  svgPath: string;
  pngPath: string;
  traceCount: number;
}

export function render(spec: PlotSpec): RenderResult {
  const tracePaths = expandGlob(spec.traces);
  if (tracePaths.length === 0) {
    throw new SpecError(`no trace files match ${spec.traces}`);
  }
  const manifest =
    spec.manifest ?? path.join(path.dirname(tracePaths[0]), "manifest.json");
  const labels = traceLabels(tracePaths, manifest);
  const traces: Trace[] = tracePaths.map(parseTrace);

  const panelSeries: Series[][] = [];
  const panelOpts: PanelOptions[] = [];
  for (const panel of spec.panels) {
    const series: Series[] = [];
    for (const t of traces) {
      const y = t.columns[panel.metric];
      if (y.every((v) => Number.isNaN(v))) {
        throw new SpecError(`${t.path}: no values for metric '${panel.metric}'`);
      }
      series.push({ label: labels.get(t.path)!, x: t.columns.step, y });
    }
    panelSeries.push(series);
    panelOpts.push({
      title: METRIC_TITLES[panel.metric] ?? panel.metric,
      xLabel: "step",
      yLabel: panel.log ? `log10 ${panel.metric}` : panel.metric,
      log: panel.log,
    });
  }

  const fig = buildFigure(panelSeries, panelOpts, spec.title);
  const svgPath = `${spec.output}.svg`;
  const pngPath = `${spec.output}.png`;
  writeFileSync(svgPath, toSvg(fig));
  writeFileSync(pngPath, toPng(fig));
  return { svgPath, pngPath, traceCount: traces.length };
}
