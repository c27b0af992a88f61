#!/usr/bin/env node
/**
 * Usage:
 *   cfmimo-plots render --in samples.csv --kind cdf --group scenario,precoder --out fig.svg
 *   cfmimo-plots render --in sweep.csv --kind sweep-line --group scenario --out cp_sweep.svg
 */

import { EmptyInputError, SchemaMismatchError } from "./csv.js";
import { FigureKind, renderFigure } from "./render.js";

function usage(): string {
  return [
    "usage: cfmimo-plots render --in <samples.csv> --kind <cdf|sweep-line>",
    "                           --group <col[,col...]> --out <figure.svg>",
    "                           [--title <text>]",
  ].join("\n");
}

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${JSON.stringify(key)}`);
    }
    flags[key.slice(2)] = argv[i + 1];
  }
  return flags;
}

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    console.error(usage());
    return 2;
  }
  let flags: Flags;
  try {
    flags = parseFlags(argv.slice(1));
  } catch (err) {
    console.error((err as Error).message);
    console.error(usage());
    return 2;
  }
  for (const required of ["in", "kind", "group", "out"]) {
    if (!(required in flags)) {
      console.error(`missing --${required}`);
      console.error(usage());
      return 2;
    }
  }
  if (flags.kind !== "cdf" && flags.kind !== "sweep-line") {
    console.error(`--kind must be cdf or sweep-line, got ${flags.kind}`);
    return 2;
  }
  try {
    renderFigure({
      input: flags.in,
      kind: flags.kind as FigureKind,
      group: flags.group.split(",").map((s) => s.trim()),
      output: flags.out,
      title: flags.title,
    });
  } catch (err) {
    if (err instanceof SchemaMismatchError || err instanceof EmptyInputError) {
      console.error(`${err.name}: ${err.message}`);
      return 1;
    }
    console.error((err as Error).message);
    return 1;
  }
  console.log(`wrote ${flags.out}`);
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("cfmimo-plots")) {
  process.exit(main(process.argv.slice(2)));
}
