/** Figure model: panels of line charts compiled to backend-neutral
 * shapes, rendered by the SVG writer and the PNG rasterizer alike. */

export type Shape =
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { kind: "line"; points: [number, number][]; color: string; width: number; dash?: number[] }
  | {
      kind: "text";
      x: number;
      y: number;
      text: string;
      size: number;
      color: string;
      anchor: "start" | "middle" | "end";
    };

export interface Figure {
  width: number;
  height: number;
  shapes: Shape[];
}

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface PanelOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  log: boolean;
}

export const PALETTE = [
  "#4363d8", "#e6194b", "#3cb44b", "#9a6324", "#911eb4",
  "#f58231", "#000075", "#808000", "#42d4f4", "#f032e6",
];

const MARGIN = { left: 64, right: 16, top: 34, bottom: 42 };
export const PANEL_W = 420;
export const PANEL_H = 300;

function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step0 = span / target;
  const mag = 10 ** Math.floor(Math.log10(step0));
  const norm = step0 / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return String(Math.round(v * 1e6) / 1e6);
}

/** Build the shapes of one panel at the given x offset. */
export function buildPanel(
  series: Series[],
  colors: Map<string, string>,
  opts: PanelOptions,
  offsetX: number,
): Shape[] {
  const shapes: Shape[] = [];
  const x0 = offsetX + MARGIN.left;
  const y0 = MARGIN.top;
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;

  const tr = opts.log ? (v: number) => Math.log10(v) : (v: number) => v;
  const usable = series.map((s) => ({
    ...s,
    pts: s.x
      .map((xv, i) => [xv, s.y[i]] as [number, number])
      .filter(([, yv]) => Number.isFinite(yv) && (!opts.log || yv > 0)),
  }));

  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const s of usable) {
    for (const [xv, yv] of s.pts) {
      xMin = Math.min(xMin, xv);
      xMax = Math.max(xMax, xv);
      yMin = Math.min(yMin, tr(yv));
      yMax = Math.max(yMax, tr(yv));
    }
  }
  if (!Number.isFinite(xMin)) {
    xMin = 0; xMax = 1; yMin = 0; yMax = 1;
  }
  if (xMax === xMin) xMax = xMin + 1;
  if (yMax === yMin) { yMax += 0.5; yMin -= 0.5; }
  const pad = (yMax - yMin) * 0.05;
  yMin -= pad;
  yMax += pad;

  const sx = (v: number) => x0 + ((v - xMin) / (xMax - xMin)) * plotW;
  const sy = (v: number) => y0 + plotH - ((tr(v) - yMin) / (yMax - yMin)) * plotH;

  // frame
  shapes.push({
    kind: "line",
    points: [
      [x0, y0], [x0 + plotW, y0], [x0 + plotW, y0 + plotH], [x0, y0 + plotH], [x0, y0],
    ],
    color: "#333333",
    width: 1,
  });

  // y ticks and grid
  const yTickVals = opts.log
    ? logTicks(yMin, yMax)
    : niceTicks(yMin, yMax).map((v) => [v, fmt(v)] as [number, string]);
  for (const [v, label] of yTickVals) {
    const yy = y0 + plotH - ((v - yMin) / (yMax - yMin)) * plotH;
    if (yy < y0 - 0.5 || yy > y0 + plotH + 0.5) continue;
    shapes.push({ kind: "line", points: [[x0, yy], [x0 + plotW, yy]], color: "#dddddd", width: 0.5 });
    shapes.push({ kind: "text", x: x0 - 6, y: yy + 3, text: label, size: 10, color: "#333333", anchor: "end" });
  }

  // x ticks
  for (const v of niceTicks(xMin, xMax, 6)) {
    const xx = sx(v);
    shapes.push({ kind: "line", points: [[xx, y0 + plotH], [xx, y0 + plotH + 4]], color: "#333333", width: 1 });
    shapes.push({ kind: "text", x: xx, y: y0 + plotH + 16, text: fmt(v), size: 10, color: "#333333", anchor: "middle" });
  }

  // series, ordered by label for deterministic styling
  for (const s of [...usable].sort((a, b) => a.label.localeCompare(b.label))) {
    if (!s.pts.length) continue;
    shapes.push({
      kind: "line",
      points: s.pts.map(([xv, yv]) => [sx(xv), sy(yv)] as [number, number]),
      color: colors.get(s.label) ?? "#000000",
      width: 1.6,
    });
  }

  shapes.push({ kind: "text", x: x0 + plotW / 2, y: y0 - 10, text: opts.title, size: 12, color: "#111111", anchor: "middle" });
  shapes.push({ kind: "text", x: x0 + plotW / 2, y: y0 + plotH + 32, text: opts.xLabel, size: 11, color: "#333333", anchor: "middle" });
  shapes.push({ kind: "text", x: offsetX + 14, y: y0 - 10, text: opts.yLabel, size: 11, color: "#333333", anchor: "start" });
  return shapes;
}

function logTicks(lo: number, hi: number): [number, string][] {
  const ticks: [number, string][] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) {
    ticks.push([e, `1e${e}`]);
  }
  if (!ticks.length) {
    ticks.push([lo, `1e${Math.round(lo)}`]);
  }
  return ticks;
}

/** Assemble panels side by side plus a shared legend strip at the bottom. */
export function buildFigure(
  panelSeries: Series[][],
  panelOpts: PanelOptions[],
  title?: string,
): Figure {
  const labels = [...new Set(panelSeries.flat().map((s) => s.label))].sort();
  const colors = new Map(labels.map((l, i) => [l, PALETTE[i % PALETTE.length]]));
  const legendRows = Math.ceil(labels.length / 3);
  const width = PANEL_W * panelSeries.length;
  const height = PANEL_H + 8 + legendRows * 16 + (title ? 18 : 0);
  const shapes: Shape[] = [
    { kind: "rect", x: 0, y: 0, w: width, h: height, fill: "#ffffff" },
  ];
  if (title) {
    shapes.push({ kind: "text", x: width / 2, y: 14, text: title, size: 13, color: "#000000", anchor: "middle" });
  }
  panelSeries.forEach((series, i) => {
    shapes.push(...buildPanel(series, colors, panelOpts[i], PANEL_W * i));
  });
  labels.forEach((label, i) => {
    const col = i % 3;
    const row = Math.floor(i / 3);
    const lx = 24 + col * (width / 3);
    const ly = PANEL_H + 14 + row * 16 + (title ? 18 : 0);
    shapes.push({ kind: "line", points: [[lx, ly - 3], [lx + 18, ly - 3]], color: colors.get(label)!, width: 2 });
    shapes.push({ kind: "text", x: lx + 24, y: ly, text: label, size: 10, color: "#111111", anchor: "start" });
  });
  return { width, height, shapes };
}
