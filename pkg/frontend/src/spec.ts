/** Plot specs: which traces, which metrics, where the figure goes. */
import { existsSync, readFileSync, readdirSync, statSync } from "node:fs";
import path from "node:path";

import { TRACE_COLUMNS, TraceColumn } from "./csv.js";

export class SpecError extends Error {}

export interface PanelSpec {
  metric: TraceColumn;
  log: boolean;
}

export interface PlotSpec {
  /** Glob over trace CSVs ('*' wildcards, no recursion). */
  traces: string;
  /** Panels left to right; a bare `metric` key is a single panel. */
  panels: PanelSpec[];
  /** Optional manifest.json for legend labels; defaults to a sibling of the traces. */
  manifest?: string;
  /** Output path stem; .svg and .png are appended. */
  output: string;
  title?: string;
}

const METRICS = new Set<string>(TRACE_COLUMNS.filter((c) => c !== "step"));

function asPanel(raw: unknown, where: string): PanelSpec {
  if (typeof raw !== "object" || raw === null) {
    throw new SpecError(`${where}: panel must be an object`);
  }
  const metric = (raw as Record<string, unknown>).metric;
  if (typeof metric !== "string" || !METRICS.has(metric)) {
    throw new SpecError(`${where}: metric must be one of ${[...METRICS].join(", ")}`);
  }
  const log = Boolean((raw as Record<string, unknown>).log ?? metric === "H");
  return { metric: metric as TraceColumn, log };
}

export function loadSpec(specPath: string): PlotSpec {
  let raw: Record<string, unknown>;
  try {
    raw = JSON.parse(readFileSync(specPath, "utf-8"));
  } catch (err) {
    throw new SpecError(`${specPath}: ${(err as Error).message}`);
  }
  if (typeof raw.traces !== "string" || !raw.traces) {
    throw new SpecError(`${specPath}: 'traces' glob is required`);
  }
  if (typeof raw.output !== "string" || !raw.output) {
    throw new SpecError(`${specPath}: 'output' path is required`);
  }
  let panels: PanelSpec[];
  if (Array.isArray(raw.panels) && raw.panels.length > 0) {
    panels = raw.panels.map((p, i) => asPanel(p, `${specPath}: panels[${i}]`));
  } else if (raw.metric !== undefined) {
    panels = [asPanel(raw, specPath)];
  } else {
    throw new SpecError(`${specPath}: need 'metric' or non-empty 'panels'`);
  }
  return {
    traces: raw.traces,
    panels,
    manifest: typeof raw.manifest === "string" ? raw.manifest : undefined,
    output: raw.output,
    title: typeof raw.title === "string" ? raw.title : undefined,
  };
}

/** Expand a single-directory glob ('*' only) into sorted paths. */
export function expandGlob(pattern: string): string[] {
  const dir = path.dirname(pattern);
  const base = path.basename(pattern);
  if (!base.includes("*")) {
    return existsSync(pattern) ? [pattern] : [];
  }
  const rx = new RegExp(
    "^" + base.split("*").map((s) => s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")).join(".*") + "$"
  );
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch {
    return [];
  }
  return names
    .filter((n) => rx.test(n) && statSync(path.join(dir, n)).isFile())
    .sort()
    .map((n) => path.join(dir, n));
}

/** Legend labels: "<aggregator> / <attack>" from the run manifest when
 * available (seed suffix appended only when a cell has several seeds),
 * otherwise the trace filename stem. */
export function traceLabels(tracePaths: string[], manifestPath?: string): Map<string, string> {
  const labels = new Map<string, string>();
  let manifest: {
    aggregators?: string[];
    attacks?: string[];
    seeds?: number[];
    traces?: string[];
  } | null = null;
  if (manifestPath && existsSync(manifestPath)) {
    try {
      manifest = JSON.parse(readFileSync(manifestPath, "utf-8"));
    } catch {
      manifest = null;
    }
  }
  const byName = new Map<string, string>();
  if (manifest?.traces && manifest.aggregators && manifest.attacks && manifest.seeds) {
    let i = 0;
    for (const agg of manifest.aggregators) {
      for (const attack of manifest.attacks) {
        for (const seed of manifest.seeds) {
          const name = manifest.traces[i++];
          if (!name) continue;
          const label =
            manifest.seeds.length > 1 ? `${agg} / ${attack} s${seed}` : `${agg} / ${attack}`;
          byName.set(name, label);
        }
      }
    }
  }
  for (const p of tracePaths) {
    const name = path.basename(p);
    labels.set(p, byName.get(name) ?? name.replace(/^trace_/, "").replace(/\.csv$/, ""));
  }
  return labels;
}
