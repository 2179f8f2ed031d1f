/** Trace CSV parsing for the fixed schema step,H,grad_norm_sq,loss,accuracy. */
import { readFileSync } from "node:fs";

export const TRACE_COLUMNS = ["step", "H", "grad_norm_sq", "loss", "accuracy"] as const;
export type TraceColumn = (typeof TRACE_COLUMNS)[number];

export interface Trace {
  path: string;
  /** Column values; blank cells (e.g. accuracy on quadratic runs) are NaN. */
  columns: Record<TraceColumn, number[]>;
}

export class TraceError extends Error {}

export function parseTrace(path: string): Trace {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new TraceError(`${path}: ${(err as Error).message}`);
  }
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) {
    throw new TraceError(`${path}: no data rows`);
  }
  const header = lines[0].split(",");
  for (const want of TRACE_COLUMNS) {
    if (!header.includes(want)) {
      throw new TraceError(`${path}: missing column '${want}'`);
    }
  }
  const index = TRACE_COLUMNS.map((c) => header.indexOf(c));
  const columns = Object.fromEntries(TRACE_COLUMNS.map((c) => [c, [] as number[]])) as Record<
    TraceColumn,
    number[]
  >;
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new TraceError(`${path}: row ${i + 1} has ${cells.length} cells, expected ${header.length}`);
    }
    TRACE_COLUMNS.forEach((c, j) => {
      const cell = cells[index[j]];
      columns[c].push(cell === "" ? NaN : Number(cell));
    });
  }
  return { path, columns };
}
