#!/usr/bin/env node
/**
 * mpemba-figures render --spec figspec.json --out figures/
 *
 * The spec file holds one figure description or an array of them:
 *   { "kind": "TRAJECTORIES", "inputs": ["runs/fig3b/trajectory_*.csv"],
 *     "title": "...", "name": "fig3b" }
 *
 * Exit codes: 0 ok, 2 bad usage/spec, 3 schema or input failure.
 */

import { mkdirSync, readFileSync, writeFileSync } from "fs";
import path from "path";

import { FigureSpec, render } from "./render.js";
import { SchemaError } from "./schema.js";

interface NamedFigureSpec extends FigureSpec {
  name?: string;
}

function parseArgs(argv: string[]) {
  if (argv[0] !== "render") {
    throw new UsageError(`unknown command "${argv[0] ?? ""}" (expected: render)`);
  }
  let spec: string | undefined;
  let out = ".";
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === "--spec") spec = argv[++i];
    else if (argv[i] === "--out") out = argv[++i];
    else throw new UsageError(`unknown flag ${argv[i]}`);
  }
  if (!spec) throw new UsageError("--spec PATH is required");
  return { spec, out };
}

class UsageError extends Error {}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error("usage: mpemba-figures render --spec PATH [--out DIR]");
    return 2;
  }
  let specs: NamedFigureSpec[];
  try {
    const doc = JSON.parse(readFileSync(args.spec, "utf8"));
    specs = Array.isArray(doc) ? doc : [doc];
  } catch (err) {
    console.error(`cannot read spec ${args.spec}: ${err}`);
    return 2;
  }
  mkdirSync(args.out, { recursive: true });
  for (const [i, spec] of specs.entries()) {
    const name = spec.name ?? `${spec.kind.toLowerCase()}_${i}`;
    try {
      const result = render(spec);
      const file = path.join(args.out, `${name}.svg`);
      writeFileSync(file, result.svg);
      const marks = result.crossings
        .map((c) => `t_Mp=${c.time.toFixed(4)}`)
        .join(", ");
      console.log(
        `${file}: ${result.series} series${marks ? `, crossings: ${marks}` : ""}`,
      );
    } catch (err) {
      if (err instanceof SchemaError) {
        console.error(`figure ${name}: ${err.message}`);
        return 3;
      }
      throw err;
    }
  }
  return 0;
}

if (process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href) {
  process.exitCode = main(process.argv.slice(2));
}
