/**
 * Minimal deterministic SVG builder: fixed canvas, fixed number formatting,
 * no timestamps or randomness, so identical inputs give identical bytes.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN: Margin = { top: 40, right: 24, bottom: 56, left: 78 };

/** Fixed-precision coordinate/value formatting. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 1e6 || abs < 1e-3) return x.toExponential(3);
  return String(Number(x.toPrecision(6)));
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (value: number): number;
  ticks: number[];
}

/** Linear scale with round-ish ticks. */
export function linearScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
  tickCount = 5,
): Scale {
  const span = hi - lo || 1;
  const scale = ((value: number) =>
    rangeLo + ((value - lo) / span) * (rangeHi - rangeLo)) as Scale;
  const step = span / (tickCount - 1);
  scale.ticks = Array.from({ length: tickCount }, (_, i) => lo + i * step);
  return scale;
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(
    readonly width = WIDTH,
    readonly height = HEIGHT,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(markup: string): void {
    this.parts.push(markup);
  }

  circle(cx: number, cy: number, r: number, fill: string, cls: string): void {
    this.parts.push(
      `<circle class="${cls}" cx="${fmt(cx)}" cy="${fmt(cy)}" r="${r}" fill="${fill}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string, cls: string): void {
    this.parts.push(
      `<rect class="${cls}" x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
        `height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, cls: string): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline class="${cls}" points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"/>`,
    );
  }

  text(
    x: number,
    y: number,
    content: string,
    opts: { size?: number; anchor?: string; fill?: string; rotate?: boolean } = {},
  ): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "middle";
    const fill = opts.fill ?? "#222";
    const transform = opts.rotate ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" ` +
        `fill="${fill}"${transform}>${esc(content)}</text>`,
    );
  }

  /** Axis lines, ticks, tick labels, and axis titles for a plot area. */
  axes(
    xScale: Scale,
    yScale: Scale,
    xLabel: string,
    yLabel: string,
    margin: Margin = MARGIN,
  ): void {
    const x0 = margin.left;
    const x1 = this.width - margin.right;
    const y0 = this.height - margin.bottom;
    const y1 = margin.top;
    this.line(x0, y0, x1, y0, "#222");
    this.line(x0, y0, x0, y1, "#222");
    for (const t of xScale.ticks) {
      const x = xScale(t);
      this.line(x, y0, x, y0 + 5, "#222");
      this.text(x, y0 + 20, fmt(t), { size: 10 });
    }
    for (const t of yScale.ticks) {
      const y = yScale(t);
      this.line(x0 - 5, y, x0, y, "#222");
      this.text(x0 - 8, y + 3, fmt(t), { size: 10, anchor: "end" });
    }
    this.text((x0 + x1) / 2, this.height - 12, xLabel, { size: 12 });
    this.text(18, (y0 + y1) / 2, yLabel, { size: 12, rotate: true });
  }

  title(content: string): void {
    this.text(this.width / 2, 22, content, { size: 14 });
  }

  toString(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}
