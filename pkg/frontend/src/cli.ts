#!/usr/bin/env node
/**
 * render --kind alpha_sweep --in sweep.csv --out fig.svg [--title ...] [--metric ...]
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { FigureKind, render } from "./render.js";
import { SchemaError } from "./csv.js";

const KINDS: FigureKind[] = ["alpha_sweep", "token_surface", "bench_bars", "pareto"];

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("render", "render one figure from a simulator CSV")
    .demandCommand(1)
    .option("kind", { choices: KINDS, demandOption: true, type: "string" })
    .option("in", { alias: "input", demandOption: true, type: "string" })
    .option("out", { alias: "output", demandOption: true, type: "string" })
    .option("title", { type: "string" })
    .option("metric", { type: "string" })
    .strict()
    .exitProcess(false)
    .parse();

  try {
    const path = render({
      kind: args.kind as FigureKind,
      input: args.in as string,
      output: args.out as string,
      title: args.title,
      metric: args.metric,
    });
    console.log(path);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js");
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
