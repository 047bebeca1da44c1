/**
 * Render a PlotSpec to its output file. The figure is fully built in memory
 * first, so a schema failure never leaves a partial file behind.
 */

import { writeFileSync } from "node:fs";
import { PlotSpec, renderFigure } from "./charts.js";

export function render(spec: PlotSpec): string {
  const svg = renderFigure(spec);
  writeFileSync(spec.output, svg, "utf8");
  return spec.output;
}

export type { PlotSpec, FigureKind } from "./charts.js";
export { SchemaError } from "./csv.js";
