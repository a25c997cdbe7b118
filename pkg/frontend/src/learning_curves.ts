/**
 * Learning-curve figure: smoothed raw-scale average reward per learner
 * against the iteration count, with an optional exact-optimum reference
 * line taken from a run summary.
 *
 * Usage:
 *   node dist/learning_curves.js --csv a.csv,b.csv,c.csv \
 *     [--labels RMAPD,C-SPD,I-AVI] [--summary summary.json] \
 *     --out figure.svg [--window 1000]
 */

import { writeFileSync } from "fs";

import { parsePlotArgs, UsageError } from "./args";
import {
  LinearScale,
  PALETTE,
  axes,
  fmt,
  legend,
  niceTicks,
  polyline,
  svgDocument,
} from "./svg";
import {
  columnSeries,
  lambdaStarFromSummary,
  loadTrace,
  movingAverage,
} from "./trace";

export interface LearningCurvesSpec {
  csv: string[];
  labels: string[];
  summary?: string;
  window: number;
}

export function buildLearningCurvesSvg(spec: LearningCurvesSpec): string {
  const series = spec.csv.map((path, i) => ({
    label: spec.labels[i],
    points: movingAverage(
      columnSeries(loadTrace(path), "avg_reward_raw", path),
      spec.window,
    ),
  }));
  const lambdaStar = spec.summary
    ? lambdaStarFromSummary(spec.summary)
    : undefined;

  const width = 880;
  const height = 520;
  const view = { width, height, left: 64, right: 24, top: 28, bottom: 56 };

  let xMax = 1;
  let yMax = lambdaStar ?? 0;
  let yMin = 0;
  for (const s of series) {
    for (const [x, y] of s.points) {
      xMax = Math.max(xMax, x);
      yMax = Math.max(yMax, y);
      yMin = Math.min(yMin, y);
    }
  }
  yMax *= 1.08;
  const xScale = new LinearScale(0, xMax, view.left, width - view.right);
  const yScale = new LinearScale(yMin, yMax, height - view.bottom, view.top);

  const parts: string[] = [];
  parts.push(
    axes(
      view,
      xScale,
      yScale,
      niceTicks(0, xMax, 8),
      niceTicks(yMin, yMax, 6),
      "iteration",
      "average reward (raw scale)",
    ),
  );
  if (lambdaStar !== undefined) {
    const y = fmt(yScale.apply(lambdaStar));
    parts.push(
      `<line x1="${view.left}" y1="${y}" x2="${width - view.right}" ` +
        `y2="${y}" stroke="#555" stroke-dasharray="6,4"/>`,
      `<text x="${width - view.right - 4}" y="${fmt(Number(y) - 5)}" ` +
        `font-size="11" text-anchor="end">optimal gain = ` +
        `${String(Number(lambdaStar.toPrecision(6)))}</text>`,
    );
  }
  series.forEach((s, i) => {
    parts.push(polyline(s.points, xScale, yScale, PALETTE[i % PALETTE.length]));
  });
  parts.push(
    legend(
      series.map((s) => s.label),
      PALETTE,
      view.left + 12,
      view.top + 12,
    ),
  );
  parts.push(
    `<text x="${view.left}" y="${height - 40}" font-size="10" ` +
      `fill="#666">smoothing window = ${spec.window}</text>`,
  );
  return svgDocument(width, height, parts.join("\n"));
}

export function main(argv: string[]): number {
  try {
    const args = parsePlotArgs(argv, 1000);
    const svg = buildLearningCurvesSvg(args);
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
