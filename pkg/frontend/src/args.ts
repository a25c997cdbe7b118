/** Shared flag parsing for the plot scripts. */

export interface PlotArgs {
  csv: string[];
  labels: string[];
  summary?: string;
  out: string;
  window: number;
  logy: boolean;
}

export class UsageError extends Error {}

export function parsePlotArgs(argv: string[], defaultWindow: number): PlotArgs {
  const flags = new Map<string, string>();
  let logy = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--logy") {
      logy = true;
      continue;
    }
    if (!arg.startsWith("--")) {
      throw new UsageError(`unexpected argument '${arg}'`);
    }
    const value = argv[i + 1];
    if (value === undefined) {
      throw new UsageError(`flag ${arg} needs a value`);
    }
    flags.set(arg.slice(2), value);
    i++;
  }
  const known = new Set(["csv", "labels", "summary", "out", "window"]);
  for (const key of flags.keys()) {
    if (!known.has(key)) throw new UsageError(`unknown flag --${key}`);
  }
  const csvArg = flags.get("csv");
  if (!csvArg) throw new UsageError("--csv is required (comma-separated paths)");
  const csv = csvArg.split(",").filter((s) => s.length > 0);
  if (csv.length === 0) throw new UsageError("--csv lists no files");
  const labels = flags.get("labels")
    ? flags.get("labels")!.split(",")
    : csv.map((path) => {
        const base = path.split("/").pop() ?? path;
        return base.replace(/^trace_/, "").replace(/\.csv$/, "");
      });
  if (labels.length !== csv.length) {
    throw new UsageError(
      `${labels.length} labels for ${csv.length} csv files`,
    );
  }
  const out = flags.get("out");
  if (!out) throw new UsageError("--out is required");
  const window = flags.get("window")
    ? Number(flags.get("window"))
    : defaultWindow;
  if (!Number.isInteger(window) || window < 1) {
    throw new UsageError(`--window must be a positive integer`);
  }
  return { csv, labels, summary: flags.get("summary"), out, window, logy };
}
