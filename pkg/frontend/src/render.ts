import { readFileSync, writeFileSync } from "node:fs";
import * as echarts from "echarts";
import type { EChartsOption } from "echarts";
import { parseComparisonDataset, parseCurveDataset, parseHistogram } from "./dataset.js";
import { comparisonFigure, histogramFigure, tradeoffFigure, type AxisRanges } from "./figures.js";

export type FigureKind = "comparison" | "tradeoff" | "histogram";

export const FIGURE_KINDS: FigureKind[] = ["comparison", "tradeoff", "histogram"];

export interface PlotSpec extends AxisRanges {
  kind: FigureKind;
  datasetPath: string;
  outputPath: string;
  width?: number;
  height?: number;
}

export interface RenderResult {
  width: number;
  height: number;
  svg: string;
}

function buildOption(spec: PlotSpec, text: string): EChartsOption {
  const ranges: AxisRanges = { xRange: spec.xRange, yRange: spec.yRange };
  switch (spec.kind) {
    case "comparison":
      return comparisonFigure(parseComparisonDataset(text), ranges);
    case "tradeoff":
      return tradeoffFigure(parseCurveDataset(text), ranges);
    case "histogram":
      return histogramFigure(parseHistogram(text), ranges);
  }
}

/** Render a dataset to an SVG image on disk and return the markup. */
export function render(spec: PlotSpec): RenderResult {
  const width = spec.width ?? 900;
  const height = spec.height ?? 600;
  const text = readFileSync(spec.datasetPath, "utf-8");
  const option = buildOption(spec, text);
  const chart = echarts.init(null, null, { renderer: "svg", ssr: true, width, height });
  try {
    chart.setOption(option);
    const svg = chart.renderToSVGString();
    writeFileSync(spec.outputPath, svg, "utf-8");
    return { width, height, svg };
  } finally {
    chart.dispose();
  }
}
