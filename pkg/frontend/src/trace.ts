/**
 * Reader for the simulator's trace CSVs.
 *
 * The schema is fixed: eight named columns, LF line endings, '.' decimal
 * separator, empty string for diagnostics that were unavailable.  Any
 * deviation is reported with the offending column named.
 */

import { readFileSync } from "fs";

export const TRACE_COLUMNS = [
  "iter",
  "avg_reward_scaled",
  "avg_reward_raw",
  "duality_gap_printed",
  "duality_gap_proofside",
  "lyapunov",
  "consensus_v",
  "consensus_mu",
] as const;

export type TraceColumn = (typeof TRACE_COLUMNS)[number];

export interface TraceRow {
  iter: number;
  values: Partial<Record<TraceColumn, number>>;
}

export class TraceSchemaError extends Error {}

export function parseTraceCsv(text: string, source: string): TraceRow[] {
  const lines = text
    .split("\n")
    .map((line) => (line.endsWith("\r") ? line.slice(0, -1) : line))
    .filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new TraceSchemaError(`${source}: empty CSV`);
  }
  const header = lines[0].split(",");
  for (let i = 0; i < TRACE_COLUMNS.length; i++) {
    if (header[i] !== TRACE_COLUMNS[i]) {
      throw new TraceSchemaError(
        `${source}: expected column ${i + 1} to be '${TRACE_COLUMNS[i]}', ` +
          `found '${header[i] ?? "<missing>"}'`,
      );
    }
  }
  if (header.length !== TRACE_COLUMNS.length) {
    throw new TraceSchemaError(
      `${source}: unexpected extra column '${header[TRACE_COLUMNS.length]}'`,
    );
  }
  if (lines.length === 1) {
    throw new TraceSchemaError(`${source}: no data rows`);
  }

  const rows: TraceRow[] = [];
  for (let k = 1; k < lines.length; k++) {
    const cells = lines[k].split(",");
    if (cells.length !== TRACE_COLUMNS.length) {
      throw new TraceSchemaError(
        `${source}: row ${k} has ${cells.length} cells, expected ` +
          `${TRACE_COLUMNS.length}`,
      );
    }
    const iter = Number(cells[0]);
    if (!Number.isFinite(iter)) {
      throw new TraceSchemaError(`${source}: row ${k}: bad iter '${cells[0]}'`);
    }
    const values: Partial<Record<TraceColumn, number>> = {};
    for (let i = 1; i < TRACE_COLUMNS.length; i++) {
      const cell = cells[i];
      if (cell === "") continue;
      const value = Number(cell);
      if (!Number.isFinite(value)) {
        throw new TraceSchemaError(
          `${source}: row ${k}: column '${TRACE_COLUMNS[i]}' is not ` +
            `numeric ('${cell}')`,
        );
      }
      values[TRACE_COLUMNS[i]] = value;
    }
    rows.push({ iter, values });
  }
  return rows;
}

export function loadTrace(path: string): TraceRow[] {
  return parseTraceCsv(readFileSync(path, "utf8"), path);
}

/** Extract one column as (iter, value) pairs, skipping empty cells. */
export function columnSeries(
  rows: TraceRow[],
  column: TraceColumn,
  source: string,
): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (const row of rows) {
    const v = row.values[column];
    if (v !== undefined) out.push([row.iter, v]);
  }
  if (out.length === 0) {
    throw new TraceSchemaError(
      `${source}: column '${column}' has no values to plot`,
    );
  }
  return out;
}

/** Trailing moving average over the value component. */
export function movingAverage(
  series: Array<[number, number]>,
  window: number,
): Array<[number, number]> {
  if (window < 1 || !Number.isInteger(window)) {
    throw new Error(`smoothing window must be a positive integer, got ${window}`);
  }
  if (window === 1) return series.slice();
  const out: Array<[number, number]> = [];
  let sum = 0;
  for (let i = 0; i < series.length; i++) {
    sum += series[i][1];
    if (i >= window) sum -= series[i - window][1];
    const n = Math.min(i + 1, window);
    out.push([series[i][0], sum / n]);
  }
  return out;
}

/** Reference value lookup in a run summary JSON (raw-scale optimum). */
export function lambdaStarFromSummary(path: string): number | undefined {
  const data = JSON.parse(readFileSync(path, "utf8"));
  const lp = data?.lp;
  if (lp && lp.available && typeof lp.lambda_star_raw === "number") {
    return lp.lambda_star_raw;
  }
  return undefined;
}
