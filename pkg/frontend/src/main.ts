#!/usr/bin/env node
/** CLI: plots <spec.json>
 *
 * The spec names a glob of byzmesh trace CSVs, the metric panels to
 * draw, and the output path stem; the tool writes <output>.svg and
 * <output>.png.  Exits 1 with the offending file named on any error. */
import { loadSpec, SpecError } from "./spec.js";
import { render } from "./render.js";
import { TraceError } from "./csv.js";

export function main(argv: string[]): number {
  if (argv.length !== 1 || argv[0] === "-h" || argv[0] === "--help") {
    console.error("usage: plots <spec.json>");
    return argv[0] === "-h" || argv[0] === "--help" ? 0 : 2;
  }
  try {
    const result = render(loadSpec(argv[0]));
    console.log(`rendered ${result.traceCount} traces -> ${result.svgPath}, ${result.pngPath}`);
    return 0;
  } catch (err) {
    if (err instanceof SpecError || err instanceof TraceError) {
      console.error(`plots: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
