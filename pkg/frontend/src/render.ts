/**
 * Figure builders over parsed run records.
 *
 * Every builder is a pure function from inputs to an SVG string plus a small
 * result summary (e.g. the crossing the trajectory figure marked), so tests
 * can check the marked positions against the run manifest.
 */

import {
  expandInputs,
  readTable,
  readTrajectory,
  SchemaError,
  Trajectory,
} from "./schema.js";
import { extent, PALETTE, PlotFrame, SvgPlot } from "./svg.js";

export type FigureKind =
  | "TRAJECTORIES"
  | "CROSSING_VS_ELL"
  | "LANDSCAPE"
  | "EM2_SCATTER"
  | "ENERGY";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  title?: string;
  xLabel?: string;
  yLabel?: string;
  yLog?: boolean;
  width?: number;
  height?: number;
  /** startup guard: ignore sign changes below this rescaled time */
  guard?: number;
}

export interface Crossing {
  time: number;
  value: number;
  pair: [string, string];
}

export interface RenderResult {
  svg: string;
  crossings: Crossing[];
  series: number;
}

const FRAME_DEFAULTS = {
  width: 640,
  height: 420,
  margin: { top: 32, right: 24, bottom: 44, left: 64 },
};

function frame(spec: FigureSpec, xDomain: [number, number], yDomain: [number, number],
               xLabel: string, yLabel: string): PlotFrame {
  return {
    ...FRAME_DEFAULTS,
    width: spec.width ?? FRAME_DEFAULTS.width,
    height: spec.height ?? FRAME_DEFAULTS.height,
    xDomain,
    yDomain,
    xLabel: spec.xLabel ?? xLabel,
    yLabel: spec.yLabel ?? yLabel,
    title: spec.title,
    yLog: spec.yLog,
  };
}

function loadTrajectories(spec: FigureSpec): Trajectory[] {
  const files = expandInputs(spec.inputs);
  if (files.length === 0) {
    throw new SchemaError(`no inputs matched: ${spec.inputs.join(", ")}`);
  }
  return files.map(readTrajectory);
}

function seriesLabel(t: Trajectory): string {
  const eps = t.meta.epsilon == null ? "gge limit" : `eps=${t.meta.epsilon}`;
  return `beta0=${t.meta.beta0} (${eps})`;
}

/** First sign change of a - b after the guard, linearly interpolated. */
export function crossingOf(a: Trajectory, b: Trajectory, guard = 0.01): Crossing | null {
  const n = Math.min(a.times.length, b.times.length);
  for (let i = 0; i + 1 < n; i++) {
    if (a.times[i] < guard) continue;
    const d0 = a.values[i] - b.values[i];
    const d1 = a.values[i + 1] - b.values[i + 1];
    if (d0 === 0 && i === 0) continue;
    if (Math.sign(d0) !== 0 && Math.sign(d1) !== Math.sign(d0)) {
      const w = d0 / (d0 - d1);
      const time = a.times[i] + w * (a.times[i + 1] - a.times[i]);
      const value = a.values[i] + w * (a.values[i + 1] - a.values[i]);
      return { time, value, pair: [seriesLabel(a), seriesLabel(b)] };
    }
  }
  return null;
}

export function renderTrajectories(spec: FigureSpec): RenderResult {
  const trajs = loadTrajectories(spec);
  const allT = trajs.flatMap((t) => t.times);
  const allV = trajs.flatMap((t) => t.values);
  const plot = new SvgPlot(frame(spec, extent(allT, 0.02), extent(allV),
    "rescaled time eps*t", trajs[0].column === "d_value" ? "distance to steady state" : trajs[0].column));
  trajs.forEach((t, i) => {
    plot.line(t.times, t.values, PALETTE[i % PALETTE.length],
      t.meta.epsilon == null ? {} : { dash: "5 3" });
  });
  const crossings: Crossing[] = [];
  for (let i = 0; i < trajs.length; i++) {
    for (let j = i + 1; j < trajs.length; j++) {
      const c = crossingOf(trajs[i], trajs[j], spec.guard ?? 0.01);
      if (c) {
        crossings.push(c);
        plot.marker(c.time, c.value, `t_Mp=${c.time.toFixed(3)}`);
      }
    }
  }
  plot.legend(trajs.map((t, i) => ({
    label: seriesLabel(t),
    color: PALETTE[i % PALETTE.length],
  })));
  return { svg: plot.toString(), crossings, series: trajs.length };
}

export function renderEnergy(spec: FigureSpec): RenderResult {
  const result = renderTrajectories({
    ...spec,
    yLabel: spec.yLabel ?? "energy density",
  });
  return result;
}

export function renderCrossingVsEll(spec: FigureSpec): RenderResult {
  const files = expandInputs(spec.inputs);
  if (files.length === 0) {
    throw new SchemaError(`no inputs matched: ${spec.inputs.join(", ")}`);
  }
  const table = readTable(files[0]);
  const iEll = table.columns.indexOf("ell");
  const iT = table.columns.indexOf("t_mp");
  if (iEll < 0 || iT < 0) {
    throw new SchemaError(`${table.source}: expected columns ell, t_mp`);
  }
  const rows = table.rows.filter((r) => Number.isFinite(r[iT]));
  const ells = rows.map((r) => r[iEll]);
  const tmps = rows.map((r) => r[iT]);
  const plot = new SvgPlot(frame(spec, extent(ells), extent([0, ...tmps]),
    "subsystem size ell", "crossing time t_Mp"));
  plot.line(ells, tmps, PALETTE[1]);
  plot.points(ells, tmps, PALETTE[1]);
  return { svg: plot.toString(), crossings: [], series: 1 };
}

export interface Em2Result extends RenderResult {
  negativeSlopePairs: number;
  totalPairs: number;
}

export function renderEm2Scatter(spec: FigureSpec): Em2Result {
  const files = expandInputs(spec.inputs);
  if (files.length === 0) {
    throw new SchemaError(`no inputs matched: ${spec.inputs.join(", ")}`);
  }
  const table = readTable(files[0]);
  const [iB, i0, iP] = ["beta", "d_initial", "d_probe"].map((c) =>
    table.columns.indexOf(c));
  if (iB < 0 || i0 < 0 || iP < 0) {
    throw new SchemaError(`${table.source}: expected beta, d_initial, d_probe`);
  }
  const d0 = table.rows.map((r) => r[i0]);
  const dp = table.rows.map((r) => r[iP]);
  const plot = new SvgPlot(frame(spec, extent(d0), extent(dp),
    "initial distance d(0)", "distance at probe time"));
  // pair segments: negative slope = the pair has crossed by the probe time
  let negative = 0;
  let total = 0;
  for (let i = 0; i < d0.length; i++) {
    for (let j = i + 1; j < d0.length; j++) {
      const slope = (dp[j] - dp[i]) / (d0[j] - d0[i]);
      const crossed = slope < 0;
      if (crossed) negative++;
      total++;
      plot.line([d0[i], d0[j]], [dp[i], dp[j]],
        crossed ? "#c0392b" : "#b0b0b0", { width: crossed ? 1.4 : 0.8 });
    }
  }
  plot.points(d0, dp, "#2471a3", 4);
  return {
    svg: plot.toString(),
    crossings: [],
    series: d0.length,
    negativeSlopePairs: negative,
    totalPairs: total,
  };
}

export function renderLandscape(spec: FigureSpec): RenderResult {
  const files = expandInputs(spec.inputs);
  if (files.length === 0) {
    throw new SchemaError(`no inputs matched: ${spec.inputs.join(", ")}`);
  }
  const table = readTable(files[0]);
  const idx = Object.fromEntries(table.columns.map((c, i) => [c, i]));
  for (const c of ["beta", "mu", "overlap", "d_trace", "d_frob", "d_norm"]) {
    if (!(c in idx)) throw new SchemaError(`${table.source}: missing column ${c}`);
  }
  // mu = 0 slice: overlap and the three distances vs beta
  const slice = table.rows.filter((r) => Math.abs(r[idx.mu]) < 1e-12);
  if (slice.length === 0) {
    throw new SchemaError(`${table.source}: no mu = 0 slice present`);
  }
  slice.sort((a, b) => a[idx.beta] - b[idx.beta]);
  const betas = slice.map((r) => r[idx.beta]);
  const curves: [string, number[]][] = [
    ["overlap", slice.map((r) => r[idx.overlap])],
    ["d_trace", slice.map((r) => r[idx.d_trace])],
    ["d_frob", slice.map((r) => r[idx.d_frob])],
    ["d_norm", slice.map((r) => r[idx.d_norm])],
  ];
  const allV = curves.flatMap(([, v]) => v);
  const plot = new SvgPlot(frame(spec, extent(betas, 0.02), extent([0, ...allV]),
    "inverse temperature beta", "overlap / distance"));
  plot.hline(0.0);
  curves.forEach(([label, vals], i) => {
    plot.line(betas, vals, PALETTE[i % PALETTE.length]);
  });
  plot.legend(curves.map(([label], i) => ({
    label,
    color: PALETTE[i % PALETTE.length],
  })));
  return { svg: plot.toString(), crossings: [], series: curves.length };
}

export function render(spec: FigureSpec): RenderResult {
  switch (spec.kind) {
    case "TRAJECTORIES":
      return renderTrajectories(spec);
    case "ENERGY":
      return renderEnergy(spec);
    case "CROSSING_VS_ELL":
      return renderCrossingVsEll(spec);
    case "EM2_SCATTER":
      return renderEm2Scatter(spec);
    case "LANDSCAPE":
      return renderLandscape(spec);
    default:
      throw new SchemaError(`unknown figure kind ${(spec as FigureSpec).kind}`);
  }
}
