/**
 * The four figure kinds, one function per kind. Each consumes one of the
 * simulator CLI's documented CSV schemas and returns SVG markup.
 *
 * Element classes are part of the contract (tests count them):
 *   alpha_sweep   ->  circle.run-point (grey), circle.avg-marker (red)
 *   token_surface ->  rect.cell
 *   bench_bars    ->  rect.bar
 *   pareto        ->  circle.pareto-point, circle.front-point, polyline.front-line
 */

import { loadCsv, num, Row, SchemaError } from "./csv.js";
import { fmt, linearScale, MARGIN, SvgDoc, HEIGHT, WIDTH } from "./svg.js";

export type FigureKind = "alpha_sweep" | "token_surface" | "bench_bars" | "pareto";

export interface PlotSpec {
  kind: FigureKind;
  input: string;
  output: string;
  title?: string;
  /** Metric column for alpha_sweep (latency_s|energy_j|cost) and
   *  bench_bars (throughput_tok_s|efficiency_tok_j|area_mm2). */
  metric?: string;
}

const GREY = "#9a9a9a";
const RED = "#d62728";
const INT4 = "#1f77b4";
const INT8 = "#ff7f0e";

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function extent(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * 0.06;
  return [lo - pad, hi + pad];
}

/** Grey point per run, red marker on the per-alpha average. */
export function alphaSweep(spec: PlotSpec): string {
  const metric = spec.metric ?? "latency_s";
  if (!["latency_s", "energy_j", "cost"].includes(metric)) {
    throw new SchemaError(`alpha_sweep metric must be latency_s, energy_j or cost, got ${metric}`);
  }
  const rows = loadCsv(spec.input, ["alpha", "run", metric]);
  const alphas = rows.map((r) => num(r, "alpha"));
  const values = rows.map((r) => num(r, metric));
  const area = plotArea();
  const [alo, ahi] = extent(alphas);
  const [vlo, vhi] = extent(values);
  const x = linearScale(alo, ahi, area.x0, area.x1);
  const y = linearScale(vlo, vhi, area.y0, area.y1);

  const doc = new SvgDoc();
  doc.title(spec.title ?? `${metric} per trade-off weight`);
  doc.axes(x, y, "alpha", metric);
  for (let i = 0; i < rows.length; i++) {
    doc.circle(x(alphas[i]), y(values[i]), 3.5, GREY, "run-point");
  }
  const byAlpha = new Map<number, number[]>();
  for (let i = 0; i < rows.length; i++) {
    const bucket = byAlpha.get(alphas[i]) ?? [];
    bucket.push(values[i]);
    byAlpha.set(alphas[i], bucket);
  }
  const averaged = [...byAlpha.entries()].sort((a, b) => a[0] - b[0]);
  for (const [alpha, bucket] of averaged) {
    const mean = bucket.reduce((s, v) => s + v, 0) / bucket.length;
    doc.circle(x(alpha), y(mean), 5.5, RED, "avg-marker");
  }
  return doc.toString();
}

/** Heatmap of the energy-latency product over the prefill x decode grid. */
export function tokenSurface(spec: PlotSpec): string {
  const rows = loadCsv(spec.input, ["prefill", "decode", "energy_latency_product"]);
  const prefills = [...new Set(rows.map((r) => num(r, "prefill")))].sort((a, b) => a - b);
  const decodes = [...new Set(rows.map((r) => num(r, "decode")))].sort((a, b) => a - b);
  const edp = new Map<string, number>();
  for (const r of rows) {
    edp.set(`${num(r, "prefill")}:${num(r, "decode")}`, num(r, "energy_latency_product"));
  }
  const values = rows.map((r) => num(r, "energy_latency_product"));
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const area = plotArea();
  const cellW = (area.x1 - area.x0) / decodes.length;
  const cellH = (area.y0 - area.y1) / prefills.length;

  const doc = new SvgDoc();
  doc.title(spec.title ?? "energy-latency product vs token counts");
  for (let i = 0; i < prefills.length; i++) {
    for (let j = 0; j < decodes.length; j++) {
      const value = edp.get(`${prefills[i]}:${decodes[j]}`);
      if (value === undefined) continue;
      // light yellow -> dark red ramp
      const t = hi === lo ? 0 : (value - lo) / (hi - lo);
      const red = Math.round(255 - 100 * t);
      const green = Math.round(237 - 200 * t);
      const blue = Math.round(160 - 120 * t);
      const cx = area.x0 + j * cellW;
      const cy = area.y0 - (i + 1) * cellH;
      doc.rect(cx, cy, cellW, cellH, `rgb(${red},${green},${blue})`, "cell");
      doc.text(cx + cellW / 2, cy + cellH / 2 + 4, fmt(value), { size: 9 });
    }
  }
  for (let j = 0; j < decodes.length; j++) {
    doc.text(area.x0 + (j + 0.5) * cellW, area.y0 + 20, String(decodes[j]), { size: 10 });
  }
  for (let i = 0; i < prefills.length; i++) {
    doc.text(area.x0 - 8, area.y0 - (i + 0.5) * cellH + 3, String(prefills[i]), {
      size: 10,
      anchor: "end",
    });
  }
  doc.text((area.x0 + area.x1) / 2, HEIGHT - 12, "generated tokens", { size: 12 });
  doc.text(18, (area.y0 + area.y1) / 2, "prefill tokens", { size: 12, rotate: true });
  return doc.toString();
}

/** Grouped int4/int8 bars per model. */
export function benchBars(spec: PlotSpec): string {
  const metric = spec.metric ?? "throughput_tok_s";
  if (!["throughput_tok_s", "efficiency_tok_j", "area_mm2"].includes(metric)) {
    throw new SchemaError(
      `bench_bars metric must be throughput_tok_s, efficiency_tok_j or area_mm2, got ${metric}`,
    );
  }
  const rows = loadCsv(spec.input, ["model", "precision", metric]);
  const models = [...new Set(rows.map((r) => r.model))];
  const value = new Map<string, number>();
  for (const r of rows) {
    value.set(`${r.model}:${r.precision}`, num(r, metric));
  }
  const hi = Math.max(...rows.map((r) => num(r, metric)));
  const area = plotArea();
  const y = linearScale(0, hi * 1.06, area.y0, area.y1);
  const group = (area.x1 - area.x0) / models.length;
  const barW = group * 0.36;

  const doc = new SvgDoc();
  doc.title(spec.title ?? `${metric} by model and precision`);
  doc.line(area.x0, area.y0, area.x1, area.y0, "#222");
  doc.line(area.x0, area.y0, area.x0, area.y1, "#222");
  for (const t of y.ticks) {
    doc.line(area.x0 - 5, y(t), area.x0, y(t), "#222");
    doc.text(area.x0 - 8, y(t) + 3, fmt(t), { size: 10, anchor: "end" });
  }
  models.forEach((model, i) => {
    const center = area.x0 + (i + 0.5) * group;
    const entries: Array<[string, string, number]> = [
      ["int4", INT4, center - barW],
      ["int8", INT8, center],
    ];
    for (const [precision, color, xPos] of entries) {
      const v = value.get(`${model}:${precision}`);
      if (v === undefined) continue;
      doc.rect(xPos, y(v), barW, area.y0 - y(v), color, "bar");
    }
    doc.text(center, area.y0 + 16, model, { size: 8 });
  });
  doc.rect(area.x1 - 150, area.y1, 12, 12, INT4, "legend");
  doc.text(area.x1 - 132, area.y1 + 10, "int4", { size: 10, anchor: "start" });
  doc.rect(area.x1 - 90, area.y1, 12, 12, INT8, "legend");
  doc.text(area.x1 - 72, area.y1 + 10, "int8", { size: 10, anchor: "start" });
  doc.text(18, (area.y0 + area.y1) / 2, metric, { size: 12, rotate: true });
  return doc.toString();
}

/** Latency/energy scatter with the non-dominated front highlighted. */
export function paretoScatter(spec: PlotSpec): string {
  const rows = loadCsv(spec.input, ["latency_s", "energy_j"]);
  const pts = rows.map((r) => [num(r, "latency_s"), num(r, "energy_j")] as [number, number]);
  const front = pts
    .filter(([l, e]) =>
      !pts.some(([lj, ej]) => lj <= l && ej <= e && (lj < l || ej < e)),
    )
    .sort((a, b) => a[0] - b[0]);
  const area = plotArea();
  const [llo, lhi] = extent(pts.map((p) => p[0]));
  const [elo, ehi] = extent(pts.map((p) => p[1]));
  const x = linearScale(llo, lhi, area.x0, area.x1);
  const y = linearScale(elo, ehi, area.y0, area.y1);

  const doc = new SvgDoc();
  doc.title(spec.title ?? "latency / energy candidates and Pareto front");
  doc.axes(x, y, "latency_s", "energy_j");
  for (const [l, e] of pts) {
    doc.circle(x(l), y(e), 3, GREY, "pareto-point");
  }
  doc.polyline(front.map(([l, e]) => [x(l), y(e)]), RED, "front-line");
  for (const [l, e] of front) {
    doc.circle(x(l), y(e), 4.5, RED, "front-point");
  }
  return doc.toString();
}

export function renderFigure(spec: PlotSpec): string {
  switch (spec.kind) {
    case "alpha_sweep":
      return alphaSweep(spec);
    case "token_surface":
      return tokenSurface(spec);
    case "bench_bars":
      return benchBars(spec);
    case "pareto":
      return paretoScatter(spec);
    default:
      throw new SchemaError(`unknown figure kind ${(spec as PlotSpec).kind}`);
  }
}
