/**
 * Consensus-error figure: two panels (occupancy l1 deviation, value l2
 * deviation) against the iteration count, one curve per input trace.
 *
 * Usage:
 *   node dist/consensus.js --csv a.csv[,b.csv] [--labels A,B] \
 *     --out figure.svg [--window 100] [--logy]
 */

import { writeFileSync } from "fs";

import { parsePlotArgs, UsageError } from "./args";
import {
  LinearScale,
  Log10Scale,
  PALETTE,
  Scale,
  axes,
  legend,
  logTicks,
  niceTicks,
  polyline,
  svgDocument,
} from "./svg";
import {
  TraceColumn,
  columnSeries,
  loadTrace,
  movingAverage,
} from "./trace";

export interface ConsensusSpec {
  csv: string[];
  labels: string[];
  window: number;
  logy: boolean;
}

const PANELS: Array<{ column: TraceColumn; title: string }> = [
  { column: "consensus_mu", title: "occupancy consensus error (l1)" },
  { column: "consensus_v", title: "value consensus error (l2)" },
];

export function buildConsensusSvg(spec: ConsensusSpec): string {
  const traces = spec.csv.map((path) => ({ path, rows: loadTrace(path) }));
  const panelWidth = 430;
  const height = 420;
  const width = panelWidth * 2 + 20;
  const parts: string[] = [];

  PANELS.forEach((panel, p) => {
    const offset = p * (panelWidth + 20);
    const view = {
      width: panelWidth,
      height,
      left: 70,
      right: 16,
      top: 34,
      bottom: 56,
    };
    const series = traces.map((t, i) => ({
      label: spec.labels[i],
      points: movingAverage(
        columnSeries(t.rows, panel.column, t.path),
        spec.window,
      ),
    }));
    let xMax = 1;
    let yMax = 0;
    let yMinPos = Number.POSITIVE_INFINITY;
    for (const s of series) {
      for (const [x, y] of s.points) {
        xMax = Math.max(xMax, x);
        yMax = Math.max(yMax, y);
        if (y > 0) yMinPos = Math.min(yMinPos, y);
      }
    }
    if (!Number.isFinite(yMinPos)) yMinPos = 1e-12;
    const xScale = new LinearScale(
      0,
      xMax,
      offset + view.left,
      offset + panelWidth - view.right,
    );
    let yScale: Scale;
    let yTicks: number[];
    if (spec.logy) {
      const lo = yMinPos;
      const hi = Math.max(yMax, lo * 10);
      yScale = new Log10Scale(lo, hi, height - view.bottom, view.top);
      yTicks = logTicks(lo, hi);
    } else {
      yScale = new LinearScale(
        0,
        yMax * 1.08 || 1,
        height - view.bottom,
        view.top,
      );
      yTicks = niceTicks(0, yMax * 1.08 || 1, 5);
    }
    // panel-local axes: shift the viewport box by the panel offset
    const panelView = { ...view, width: offset + panelWidth, left: offset + view.left };
    parts.push(
      axes(
        { ...panelView, right: view.right },
        xScale,
        yScale,
        niceTicks(0, xMax, 5),
        yTicks,
        "iteration",
        panel.title,
      ),
    );
    series.forEach((s, i) => {
      const pts = spec.logy
        ? s.points.filter(([, y]) => y > 0)
        : s.points;
      if (pts.length) {
        parts.push(polyline(pts, xScale, yScale, PALETTE[i % PALETTE.length]));
      }
    });
    if (p === 0) {
      parts.push(
        legend(
          series.map((s) => s.label),
          PALETTE,
          offset + view.left + 10,
          view.top + 12,
        ),
      );
    }
  });
  parts.push(
    `<text x="70" y="${height - 40}" font-size="10" fill="#666">` +
      `smoothing window = ${spec.window}</text>`,
  );
  return svgDocument(width, height, parts.join("\n"));
}

export function main(argv: string[]): number {
  try {
    const args = parsePlotArgs(argv, 100);
    const svg = buildConsensusSvg(args);
    writeFileSync(args.out, svg);
    return 0;
  } catch (err) {
    if (err instanceof UsageError || err instanceof Error) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
