import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import {
  DatasetError,
  parseComparisonDataset,
  parseCurveDataset,
  parseHistogram,
} from "../src/dataset.js";

const comparisonText = readFileSync(new URL("fixtures/comparison.csv", import.meta.url), "utf-8");
const curveText = readFileSync(new URL("fixtures/spdc_curve.csv", import.meta.url), "utf-8");
const histogramText = readFileSync(
  new URL("fixtures/qd1_hom_histogram.txt", import.meta.url),
  "utf-8",
);

describe("parseComparisonDataset", () => {
  it("splits source points from the limit curve", () => {
    const dataset = parseComparisonDataset(comparisonText);
    expect(dataset.sources).toHaveLength(8);
    expect(dataset.limitCurve).toHaveLength(30);
    for (const point of dataset.limitCurve) {
      expect(point.meanPairs).toBeGreaterThan(0);
      expect(point.overlap).toBeLessThanOrEqual(1);
    }
  });

  it("keeps labels and kinds", () => {
    const dataset = parseComparisonDataset(comparisonText);
    const labels = dataset.sources.map((p) => p.label);
    expect(labels).toContain("QD1");
    const kinds = new Set(dataset.sources.map((p) => p.kind));
    expect(kinds).toEqual(new Set(["qd_nonresonant", "qd_resonant", "spdc"]));
  });

  it("passes nan markers through as NaN", () => {
    const dataset = parseComparisonDataset(comparisonText);
    const spdc = dataset.sources.find((p) => p.kind === "spdc");
    expect(spdc).toBeDefined();
    expect(Number.isNaN(spdc!.g2)).toBe(true);
  });

  it("rejects a header with a missing column", () => {
    const mangled = comparisonText.replace("overlap_raw", "overlap");
    expect(() => parseComparisonDataset(mangled)).toThrow(DatasetError);
    expect(() => parseComparisonDataset(mangled)).toThrow(/missing column/);
  });

  it("rejects an empty dataset", () => {
    const headerOnly = comparisonText.split("\n")[0] + "\n";
    expect(() => parseComparisonDataset(headerOnly)).toThrow(/no data rows/);
  });

  it("rejects a curve-only dataset with no source rows", () => {
    const lines = comparisonText.trim().split("\n");
    const curveOnly = [lines[0], ...lines.slice(1).filter((l) => l.includes("spdc_limit"))];
    expect(() => parseComparisonDataset(curveOnly.join("\n"))).toThrow(/no source rows/);
  });

  it("rejects text that is not numeric where a number is expected", () => {
    const lines = comparisonText.trim().split("\n");
    const broken = [lines[0], lines[1].replace(/^([^,]+),[^,]+/, "$1,bright")].join("\n");
    expect(() => parseComparisonDataset(broken)).toThrow(/non-numeric/);
  });
});

describe("parseCurveDataset", () => {
  it("reads every grid point", () => {
    const curve = parseCurveDataset(curveText);
    expect(curve).toHaveLength(25);
    expect(curve[0].meanPairs).toBeCloseTo(0.001, 12);
    expect(curve[curve.length - 1].meanPairs).toBeCloseTo(0.1, 12);
  });

  it("sees the trade-off: overlap falls while g2 rises", () => {
    const curve = parseCurveDataset(curveText);
    for (let i = 1; i < curve.length; i++) {
      expect(curve[i].overlap).toBeLessThan(curve[i - 1].overlap);
      expect(curve[i].g2).toBeGreaterThan(curve[i - 1].g2);
    }
  });

  it("rejects a comparison file offered as a curve", () => {
    expect(() => parseCurveDataset(comparisonText)).toThrow(/missing column 'mean_pairs'/);
  });
});

describe("parseHistogram", () => {
  it("reads delays, counts, and header metadata", () => {
    const hist = parseHistogram(histogramText);
    expect(hist.delays).toHaveLength(1708);
    expect(hist.counts).toHaveLength(1708);
    expect(hist.counts.reduce((a, b) => a + b, 0)).toBe(39830);
    expect(Number(hist.meta.bin_width)).toBeCloseTo(0.05, 12);
    expect(hist.meta.mode).toBe("hom");
  });

  it("rejects a file with no data rows", () => {
    expect(() => parseHistogram("# correlation-histogram v1\n# mode = hom\n")).toThrow(
      /no data rows/,
    );
  });

  it("rejects malformed rows", () => {
    expect(() => parseHistogram("1.0 2 3\n")).toThrow(/malformed/);
    expect(() => parseHistogram("np.float64(1.0) 2\n")).toThrow(/malformed/);
  });
});
