/** Tiny hand-rolled SVG plot builder: one x/y panel with lines and points. */

export interface PlotFrame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel: string;
  yLabel: string;
  title?: string;
  yLog?: boolean;
}

export const PALETTE = [
  "#c0392b", "#2471a3", "#1e8449", "#9a7d0a", "#7d3c98",
  "#148f77", "#a04000", "#5d6d7e", "#af601a", "#2e4053",
];

export function makeScales(frame: PlotFrame) {
  const { width, height, margin, xDomain, yDomain, yLog } = frame;
  const innerW = width - margin.left - margin.right;
  const innerH = height - margin.top - margin.bottom;
  const ylo = yLog ? Math.log10(yDomain[0]) : yDomain[0];
  const yhi = yLog ? Math.log10(yDomain[1]) : yDomain[1];
  const x = (v: number) =>
    margin.left + ((v - xDomain[0]) / (xDomain[1] - xDomain[0] || 1)) * innerW;
  const y = (v: number) => {
    const t = yLog ? Math.log10(Math.max(v, 1e-300)) : v;
    return margin.top + innerH - ((t - ylo) / (yhi - ylo || 1)) * innerH;
  };
  return { x, y, innerW, innerH };
}

function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) out.push(Number(v.toPrecision(12)));
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class SvgPlot {
  private parts: string[] = [];
  readonly scale: ReturnType<typeof makeScales>;

  constructor(readonly frame: PlotFrame) {
    this.scale = makeScales(frame);
    this.drawFrame();
  }

  private drawFrame() {
    const { width, height, margin, title, xLabel, yLabel } = this.frame;
    const { x, y } = this.scale;
    const x0 = margin.left;
    const y0 = height - margin.bottom;
    const x1 = width - margin.right;
    const y1 = margin.top;
    this.parts.push(
      `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" ` +
        `fill="none" stroke="#333" stroke-width="1"/>`,
    );
    for (const t of ticks(this.frame.xDomain[0], this.frame.xDomain[1])) {
      const px = x(t);
      this.parts.push(
        `<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 4}" stroke="#333"/>`,
        `<text x="${px.toFixed(2)}" y="${y0 + 16}" font-size="10" text-anchor="middle">${fmt(t)}</text>`,
      );
    }
    const yDomain = this.frame.yDomain;
    const yticks = this.frame.yLog
      ? logTicks(yDomain[0], yDomain[1])
      : ticks(yDomain[0], yDomain[1]);
    for (const t of yticks) {
      const py = y(t);
      this.parts.push(
        `<line x1="${x0 - 4}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#333"/>`,
        `<text x="${x0 - 6}" y="${(py + 3).toFixed(2)}" font-size="10" text-anchor="end">${fmt(t)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${height - 6}" font-size="12" text-anchor="middle">${esc(xLabel)}</text>`,
      `<text x="14" y="${(y0 + y1) / 2}" font-size="12" text-anchor="middle" ` +
        `transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
    );
    if (title) {
      this.parts.push(
        `<text x="${(x0 + x1) / 2}" y="${y1 - 8}" font-size="13" text-anchor="middle">${esc(title)}</text>`,
      );
    }
  }

  line(xs: number[], ys: number[], color: string, opts: { dash?: string; width?: number } = {}) {
    const { x, y } = this.scale;
    const pts = xs.map((v, i) => `${x(v).toFixed(2)},${y(ys[i]).toFixed(2)}`).join(" ");
    const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" ` +
        `stroke-width="${opts.width ?? 1.5}"${dash}/>`,
    );
  }

  points(xs: number[], ys: number[], color: string, r = 3) {
    const { x, y } = this.scale;
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${x(xs[i]).toFixed(2)}" cy="${y(ys[i]).toFixed(2)}" r="${r}" ` +
          `fill="${color}" fill-opacity="0.85"/>`,
      );
    }
  }

  marker(xv: number, yv: number, label: string) {
    const { x, y } = this.scale;
    this.parts.push(
      `<circle class="crossing-marker" cx="${x(xv).toFixed(2)}" cy="${y(yv).toFixed(2)}" ` +
        `r="5" fill="none" stroke="#000" stroke-width="1.5" data-x="${xv}" data-y="${yv}"/>`,
      `<text x="${(x(xv) + 8).toFixed(2)}" y="${(y(yv) - 8).toFixed(2)}" font-size="10">${esc(label)}</text>`,
    );
  }

  vline(xv: number, color = "#888") {
    const { x } = this.scale;
    const { margin, height } = this.frame;
    this.parts.push(
      `<line x1="${x(xv).toFixed(2)}" y1="${margin.top}" x2="${x(xv).toFixed(2)}" ` +
        `y2="${height - margin.bottom}" stroke="${color}" stroke-dasharray="4 3"/>`,
    );
  }

  hline(yv: number, color = "#888") {
    const { y } = this.scale;
    const { margin, width } = this.frame;
    this.parts.push(
      `<line x1="${margin.left}" y1="${y(yv).toFixed(2)}" x2="${width - margin.right}" ` +
        `y2="${y(yv).toFixed(2)}" stroke="${color}" stroke-dasharray="4 3"/>`,
    );
  }

  legend(entries: { label: string; color: string; dash?: string }[]) {
    const { width, margin } = this.frame;
    const x0 = width - margin.right - 150;
    let y0 = margin.top + 12;
    for (const e of entries) {
      const dash = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
      this.parts.push(
        `<line x1="${x0}" y1="${y0 - 3}" x2="${x0 + 22}" y2="${y0 - 3}" ` +
          `stroke="${e.color}" stroke-width="2"${dash}/>`,
        `<text x="${x0 + 28}" y="${y0}" font-size="10">${esc(e.label)}</text>`,
      );
      y0 += 14;
    }
  }

  toString(): string {
    const { width, height } = this.frame;
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n` +
      `<rect width="${width}" height="${height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function logTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  const e0 = Math.ceil(Math.log10(lo));
  const e1 = Math.floor(Math.log10(hi));
  for (let e = e0; e <= e1; e++) out.push(Math.pow(10, e));
  if (out.length === 0) out.push(lo, hi);
  return out;
}

export function extent(vals: number[], pad = 0.05): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of vals) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - pad * span, hi + pad * span];
}
