import { mkdtempSync, existsSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { render } from "../src/render.js";
import { SchemaError } from "../src/csv.js";

const FIXTURES = join(__dirname, "fixtures");
const OUT = mkdtempSync(join(tmpdir(), "cimdse-plots-"));

function countMatches(svg: string, pattern: RegExp): number {
  return (svg.match(pattern) ?? []).length;
}

function renderToString(name: string, spec: Parameters<typeof render>[0]): string {
  render(spec);
  return readFileSync(spec.output, "utf8");
}

describe("alpha_sweep", () => {
  it("draws one grey point per run and one red average per alpha", () => {
    const out = join(OUT, "alpha.svg");
    const svg = renderToString("alpha", {
      kind: "alpha_sweep",
      input: join(FIXTURES, "sweep_alpha.csv"),
      output: out,
    });
    expect(countMatches(svg, /class="run-point"/g)).toBe(25);
    expect(countMatches(svg, /class="avg-marker"/g)).toBe(5);
  });

  it("supports the energy metric column", () => {
    const out = join(OUT, "alpha-energy.svg");
    const svg = renderToString("alpha-energy", {
      kind: "alpha_sweep",
      input: join(FIXTURES, "sweep_alpha.csv"),
      output: out,
      metric: "energy_j",
    });
    expect(countMatches(svg, /class="run-point"/g)).toBe(25);
    expect(svg).toContain("energy_j");
  });

  it("rejects unknown metrics", () => {
    expect(() =>
      render({
        kind: "alpha_sweep",
        input: join(FIXTURES, "sweep_alpha.csv"),
        output: join(OUT, "never.svg"),
        metric: "area_mm2",
      }),
    ).toThrow(SchemaError);
  });
});

describe("bench_bars", () => {
  it("draws one bar per (model, precision) row", () => {
    const out = join(OUT, "bench.svg");
    const svg = renderToString("bench", {
      kind: "bench_bars",
      input: join(FIXTURES, "bench.csv"),
      output: out,
    });
    expect(countMatches(svg, /class="bar"/g)).toBe(24);
  });
});

describe("token_surface", () => {
  it("draws one heatmap cell per grid point", () => {
    const out = join(OUT, "tokens.svg");
    const svg = renderToString("tokens", {
      kind: "token_surface",
      input: join(FIXTURES, "sweep_tokens.csv"),
      output: out,
    });
    expect(countMatches(svg, /class="cell"/g)).toBe(16);
  });
});

describe("pareto", () => {
  it("draws every candidate and highlights the non-dominated front", () => {
    const out = join(OUT, "pareto.svg");
    const svg = renderToString("pareto", {
      kind: "pareto",
      input: join(FIXTURES, "ranking.csv"),
      output: out,
    });
    expect(countMatches(svg, /class="pareto-point"/g)).toBe(64);
    expect(countMatches(svg, /class="front-point"/g)).toBeGreaterThanOrEqual(1);
    expect(countMatches(svg, /class="front-line"/g)).toBe(1);
  });
});

describe("failure modes", () => {
  it("empty CSV raises and writes nothing", () => {
    const out = join(OUT, "empty.svg");
    expect(() =>
      render({
        kind: "alpha_sweep",
        input: join(FIXTURES, "empty.csv"),
        output: out,
      }),
    ).toThrow(/no data rows/);
    expect(existsSync(out)).toBe(false);
  });

  it("schema mismatch names the missing columns", () => {
    expect(() =>
      render({
        kind: "bench_bars",
        input: join(FIXTURES, "sweep_alpha.csv"),
        output: join(OUT, "never2.svg"),
      }),
    ).toThrow(/missing columns: model, precision/);
  });
});

describe("determinism", () => {
  it("identical input renders byte-identical output", () => {
    const specs = [
      { kind: "alpha_sweep" as const, file: "sweep_alpha.csv" },
      { kind: "bench_bars" as const, file: "bench.csv" },
      { kind: "token_surface" as const, file: "sweep_tokens.csv" },
      { kind: "pareto" as const, file: "ranking.csv" },
    ];
    for (const { kind, file } of specs) {
      const a = join(OUT, `det-a-${kind}.svg`);
      const b = join(OUT, `det-b-${kind}.svg`);
      render({ kind, input: join(FIXTURES, file), output: a });
      render({ kind, input: join(FIXTURES, file), output: b });
      expect(readFileSync(a)).toEqual(readFileSync(b));
    }
  });
});
