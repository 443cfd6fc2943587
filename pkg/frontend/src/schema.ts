/**
 * Readers for the `mpemba-lab v1` record format.
 *
 * A run directory contains `manifest.json` plus one CSV per trajectory or
 * table. Trajectory files carry two comment lines (version header, JSON
 * metadata), then a column row and numeric rows. Table files replace the
 * metadata line with `# table: <name>`.
 */

import { readFileSync, readdirSync, statSync } from "fs";
import path from "path";

export const SCHEMA_VERSION = "mpemba-lab v1";

export class SchemaError extends Error {}

export interface TrajectoryMeta {
  model: string;
  dissipator: string;
  engine: string;
  beta0: number;
  mu0?: number;
  epsilon?: number | null;
  ell?: number;
  kind?: string;
  observable?: string;
}

export interface Trajectory {
  times: number[];
  values: number[];
  column: string;
  meta: TrajectoryMeta;
  source: string;
}

export interface Table {
  name: string;
  columns: string[];
  rows: number[][];
  source: string;
}

export interface Manifest {
  schema: string;
  config: Record<string, unknown>;
  trajectories: string[];
  tables: Record<string, string>;
  summary: Record<string, unknown>;
}

function splitCsvLines(text: string, source: string): string[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0 || lines[0].trim() !== `# ${SCHEMA_VERSION}`) {
    throw new SchemaError(
      `${source}: expected header "# ${SCHEMA_VERSION}", got "${lines[0] ?? "<empty>"}"`,
    );
  }
  return lines;
}

export function readTrajectory(file: string): Trajectory {
  const lines = splitCsvLines(readFileSync(file, "utf8"), file);
  if (!lines[1]?.startsWith("# meta: ")) {
    throw new SchemaError(`${file}: missing "# meta:" line`);
  }
  const meta = JSON.parse(lines[1].slice("# meta: ".length)) as TrajectoryMeta;
  const header = lines[2].split(",");
  if (header[0] !== "eps_t" || header.length < 2) {
    throw new SchemaError(`${file}: unexpected columns [${header.join(", ")}]`);
  }
  const times: number[] = [];
  const values: number[] = [];
  for (const line of lines.slice(3)) {
    const cells = line.split(",");
    const t = Number(cells[0]);
    const v = Number(cells[1]);
    if (!Number.isFinite(t) || !Number.isFinite(v)) {
      throw new SchemaError(`${file}: non-numeric row "${line}"`);
    }
    times.push(t);
    values.push(v);
  }
  if (times.length < 2) {
    throw new SchemaError(`${file}: trajectory needs at least two samples`);
  }
  return { times, values, column: header[1], meta, source: file };
}

export function readTable(file: string): Table {
  const lines = splitCsvLines(readFileSync(file, "utf8"), file);
  if (!lines[1]?.startsWith("# table: ")) {
    throw new SchemaError(`${file}: missing "# table:" line`);
  }
  const name = lines[1].slice("# table: ".length).trim();
  const columns = lines[2].split(",");
  const rows = lines.slice(3).map((line) => {
    const cells = line.split(",").map(Number);
    if (cells.some((c) => !Number.isFinite(c))) {
      throw new SchemaError(`${file}: non-numeric row "${line}"`);
    }
    return cells;
  });
  return { name, columns, rows, source: file };
}

export function readManifest(dir: string): Manifest {
  const manifest = JSON.parse(
    readFileSync(path.join(dir, "manifest.json"), "utf8"),
  ) as Manifest;
  if (manifest.schema !== SCHEMA_VERSION) {
    throw new SchemaError(
      `${dir}: manifest schema "${manifest.schema}" != "${SCHEMA_VERSION}"`,
    );
  }
  return manifest;
}

/**
 * Expand input patterns. Supports literal files/directories and a `*`
 * wildcard inside the basename (e.g. `runs/fig3b/trajectory_*.csv`);
 * directories expand to every contained .csv.
 */
export function expandInputs(patterns: string[]): string[] {
  const out: string[] = [];
  for (const pattern of patterns) {
    const base = path.basename(pattern);
    if (base.includes("*")) {
      const dir = path.dirname(pattern);
      const re = new RegExp(
        "^" + base.split("*").map(escapeRegExp).join(".*") + "$",
      );
      let entries: string[] = [];
      try {
        entries = readdirSync(dir);
      } catch {
        continue;
      }
      for (const entry of entries.sort()) {
        if (re.test(entry)) out.push(path.join(dir, entry));
      }
    } else if (exists(pattern) && statSync(pattern).isDirectory()) {
      for (const entry of readdirSync(pattern).sort()) {
        if (entry.endsWith(".csv")) out.push(path.join(pattern, entry));
      }
    } else if (exists(pattern)) {
      out.push(pattern);
    }
  }
  return out;
}

function exists(p: string): boolean {
  try {
    statSync(p);
    return true;
  } catch {
    return false;
  }
}

function escapeRegExp(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}
