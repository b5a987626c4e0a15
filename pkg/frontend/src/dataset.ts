import Papa from "papaparse";

export class DatasetError extends Error {}

export interface SourcePoint {
  label: string;
  brightness: number;
  sigmaBrightness: number;
  overlapRaw: number;
  sigmaOverlapRaw: number;
  overlapCorrected: number;
  sigmaOverlapCorrected: number;
  g2: number;
  sigmaG2: number;
  kind: string;
}

export interface CurvePoint {
  meanPairs: number;
  overlap: number;
  g2: number;
}

export interface ComparisonDataset {
  sources: SourcePoint[];
  limitCurve: CurvePoint[];
}

export interface Histogram {
  delays: number[];
  counts: number[];
  meta: Record<string, string>;
}

const COMPARISON_COLUMNS = [
  "label",
  "brightness",
  "sigma_brightness",
  "overlap_raw",
  "sigma_overlap_raw",
  "overlap_corrected",
  "sigma_overlap_corrected",
  "g2",
  "sigma_g2",
  "kind",
];

const CURVE_COLUMNS = ["mean_pairs", "overlap", "g2"];

function parseRows(text: string, required: string[], what: string) {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const column of required) {
    if (!fields.includes(column)) {
      throw new DatasetError(`${what} is missing column '${column}'`);
    }
  }
  if (parsed.data.length === 0) {
    throw new DatasetError(`${what} has no data rows`);
  }
  return parsed.data;
}

function num(row: Record<string, string>, column: string): number {
  const value = Number(row[column]);
  if (Number.isNaN(value) && row[column]?.toLowerCase() !== "nan") {
    throw new DatasetError(`non-numeric value '${row[column]}' in column '${column}'`);
  }
  return value;
}

/** Split the comparison export into source points and the pair-source limit curve. */
export function parseComparisonDataset(text: string): ComparisonDataset {
  const rows = parseRows(text, COMPARISON_COLUMNS, "comparison dataset");
  const sources: SourcePoint[] = [];
  const limitCurve: CurvePoint[] = [];
  for (const row of rows) {
    if (row.kind === "spdc_limit") {
      limitCurve.push({
        meanPairs: num(row, "brightness"),
        overlap: num(row, "overlap_raw"),
        g2: num(row, "g2"),
      });
      continue;
    }
    sources.push({
      label: row.label,
      brightness: num(row, "brightness"),
      sigmaBrightness: num(row, "sigma_brightness"),
      overlapRaw: num(row, "overlap_raw"),
      sigmaOverlapRaw: num(row, "sigma_overlap_raw"),
      overlapCorrected: num(row, "overlap_corrected"),
      sigmaOverlapCorrected: num(row, "sigma_overlap_corrected"),
      g2: num(row, "g2"),
      sigmaG2: num(row, "sigma_g2"),
      kind: row.kind,
    });
  }
  if (sources.length === 0) {
    throw new DatasetError("comparison dataset has no source rows");
  }
  return { sources, limitCurve };
}

/** Parse the standalone trade-off curve export (mean_pairs, overlap, g2). */
export function parseCurveDataset(text: string): CurvePoint[] {
  const rows = parseRows(text, CURVE_COLUMNS, "trade-off dataset");
  return rows.map((row) => ({
    meanPairs: num(row, "mean_pairs"),
    overlap: num(row, "overlap"),
    g2: num(row, "g2"),
  }));
}

/** Parse the self-describing histogram text format ('# key = value' header, then "delay count" rows). */
export function parseHistogram(text: string): Histogram {
  const meta: Record<string, string> = {};
  const delays: number[] = [];
  const counts: number[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "") continue;
    if (trimmed.startsWith("#")) {
      const match = trimmed.match(/^#\s*([\w.]+)\s*=\s*(.+)$/);
      if (match) meta[match[1]] = match[2];
      continue;
    }
    const parts = trimmed.split(/\s+/);
    const delay = Number(parts[0]);
    const count = Number(parts[1]);
    if (parts.length !== 2 || !Number.isFinite(delay) || !Number.isFinite(count)) {
      throw new DatasetError(`malformed histogram row '${trimmed}'`);
    }
    delays.push(delay);
    counts.push(count);
  }
  if (delays.length === 0) {
    throw new DatasetError("histogram has no data rows");
  }
  return { delays, counts, meta };
}
