/**
 * Minimal deterministic SVG chart builder.
 *
 * Everything is emitted as plain strings with fixed precision, a fixed
 * palette, and a monospace font, so rendering the same inputs always
 * produces byte-identical files.
 */

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

export interface Viewport {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toPrecision(8);
  return String(Number(s));
}

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  apply(x: number): number {
    const span = this.d1 - this.d0 || 1;
    return this.r0 + ((x - this.d0) / span) * (this.r1 - this.r0);
  }
}

export class Log10Scale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  apply(x: number): number {
    const lo = Math.log10(this.d0);
    const hi = Math.log10(this.d1);
    const span = hi - lo || 1;
    const v = Math.log10(Math.max(x, Number.MIN_VALUE));
    return this.r0 + ((v - lo) / span) * (this.r1 - this.r0);
  }
}

export type Scale = LinearScale | Log10Scale;

/** Round-number ticks covering [lo, hi], at most `count + 1` of them. */
export function niceTicks(lo: number, hi: number, count: number): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const power = Math.floor(Math.log10(rawStep));
  const base = Math.pow(10, power);
  let step = base;
  for (const m of [1, 2, 5, 10]) {
    if (m * base >= rawStep) {
      step = m * base;
      break;
    }
  }
  const ticks: number[] = [];
  let t = Math.ceil(lo / step) * step;
  for (; t <= hi + step * 1e-9; t += step) {
    ticks.push(Number(t.toPrecision(10)));
  }
  return ticks;
}

export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  const first = Math.floor(Math.log10(lo));
  const last = Math.ceil(Math.log10(hi));
  for (let e = first; e <= last; e++) {
    const t = Math.pow(10, e);
    if (t >= lo / 1.0001 && t <= hi * 1.0001) ticks.push(t);
  }
  return ticks.length ? ticks : [lo];
}

export function polyline(
  points: Array<[number, number]>,
  xScale: Scale,
  yScale: Scale,
  color: string,
): string {
  const coords = points
    .map(([x, y]) => `${fmt(xScale.apply(x))},${fmt(yScale.apply(y))}`)
    .join(" ");
  return (
    `<polyline fill="none" stroke="${color}" stroke-width="1.5" ` +
    `points="${coords}"/>`
  );
}

export function axes(
  view: Viewport,
  xScale: Scale,
  yScale: Scale,
  xTicks: number[],
  yTicks: number[],
  xLabel: string,
  yLabel: string,
): string {
  const parts: string[] = [];
  const x0 = view.left;
  const x1 = view.width - view.right;
  const y0 = view.height - view.bottom;
  const y1 = view.top;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`,
  );
  for (const t of xTicks) {
    const x = fmt(xScale.apply(t));
    parts.push(
      `<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 4}" stroke="#333"/>`,
      `<text x="${x}" y="${y0 + 16}" font-size="10" text-anchor="middle">` +
        `${formatTick(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = fmt(yScale.apply(t));
    parts.push(
      `<line x1="${x0 - 4}" y1="${y}" x2="${x0}" y2="${y}" stroke="#333"/>`,
      `<text x="${x0 - 6}" y="${y}" font-size="10" text-anchor="end" ` +
        `dominant-baseline="middle">${formatTick(t)}</text>`,
    );
  }
  const xMid = fmt((x0 + x1) / 2);
  const yLabelX = fmt(x0 - 52);
  const yMid = fmt((y0 + y1) / 2);
  parts.push(
    `<text x="${xMid}" y="${view.height - 6}" font-size="11" ` +
      `text-anchor="middle">${escapeXml(xLabel)}</text>`,
    `<text x="${yLabelX}" y="${yMid}" font-size="11" ` +
      `text-anchor="middle" transform="rotate(-90 ${yLabelX} ${yMid})">` +
      `${escapeXml(yLabel)}</text>`,
  );
  return parts.join("\n");
}

export function formatTick(t: number): string {
  const abs = Math.abs(t);
  if (abs !== 0 && (abs >= 100000 || abs < 0.001)) {
    return t.toExponential(0).replace("+", "");
  }
  return String(Number(t.toPrecision(6)));
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function legend(
  labels: string[],
  colors: string[],
  x: number,
  y: number,
): string {
  const parts: string[] = [];
  labels.forEach((label, i) => {
    const yy = y + i * 16;
    parts.push(
      `<line x1="${x}" y1="${yy}" x2="${x + 22}" y2="${yy}" ` +
        `stroke="${colors[i % colors.length]}" stroke-width="2"/>`,
      `<text x="${x + 28}" y="${yy + 4}" font-size="11">` +
        `${escapeXml(label)}</text>`,
    );
  });
  return parts.join("\n");
}

export function svgDocument(
  width: number,
  height: number,
  body: string,
): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}" ` +
    `font-family="monospace">\n<rect width="${width}" height="${height}" ` +
    `fill="white"/>\n${body}\n</svg>\n`
  );
}
