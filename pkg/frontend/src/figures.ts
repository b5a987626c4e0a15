import type {
  CustomSeriesRenderItemAPI,
  CustomSeriesRenderItemParams,
  EChartsOption,
  SeriesOption,
} from "echarts";
import type { ComparisonDataset, CurvePoint, Histogram, SourcePoint } from "./dataset.js";
import { DatasetError } from "./dataset.js";

export interface AxisRanges {
  xRange?: [number, number];
  yRange?: [number, number];
}

// Brightness at which heralded pair sources are conventionally operated; the
// trade-off figures mark it with a dashed guide.
export const GUIDE_MEAN_PAIRS = 0.01;

const KIND_LABELS: Record<string, string> = {
  qd_nonresonant: "QD, nonresonant pumping",
  qd_resonant: "QD, resonant pumping",
  spdc: "Heralded pair source",
};

function errorBarSeries(points: SourcePoint[]): SeriesOption {
  // Custom series drawing a vertical bar over each scatter point whose
  // overlap uncertainty is finite.
  const data = points
    .filter((p) => Number.isFinite(p.sigmaOverlapRaw) && p.sigmaOverlapRaw > 0)
    .map((p) => [p.brightness, p.overlapRaw - p.sigmaOverlapRaw, p.overlapRaw + p.sigmaOverlapRaw]);
  return {
    type: "custom",
    name: "uncertainty",
    silent: true,
    z: 1,
    renderItem: (_params: CustomSeriesRenderItemParams, api: CustomSeriesRenderItemAPI) => {
      const low = api.coord([api.value(0), api.value(1)]);
      const high = api.coord([api.value(0), api.value(2)]);
      return {
        type: "line",
        shape: { x1: low[0], y1: low[1], x2: high[0], y2: high[1] },
        style: { stroke: "#888", lineWidth: 1 },
      };
    },
    data,
  };
}

/** Brightness versus uncorrected overlap for every source, with the pair-source ceiling. */
export function comparisonFigure(dataset: ComparisonDataset, ranges: AxisRanges = {}): EChartsOption {
  const series: SeriesOption[] = [];
  for (const [kind, label] of Object.entries(KIND_LABELS)) {
    const points = dataset.sources.filter((p) => p.kind === kind);
    if (points.length === 0) continue;
    series.push({
      type: "scatter",
      name: label,
      symbolSize: 10,
      z: 2,
      data: points.map((p) => ({
        name: p.label,
        value: [p.brightness, p.overlapRaw],
      })),
    });
  }
  if (series.length === 0) {
    throw new DatasetError("comparison dataset has no plottable source kinds");
  }
  series.push(errorBarSeries(dataset.sources));
  if (dataset.limitCurve.length > 0) {
    const curve = [...dataset.limitCurve].sort((a, b) => a.meanPairs - b.meanPairs);
    series.push({
      type: "line",
      name: "pair-source limit",
      showSymbol: false,
      z: 1,
      lineStyle: { width: 2 },
      data: curve.map((p) => [p.meanPairs, p.overlap]),
    });
  }
  return {
    animation: false,
    legend: { top: 8 },
    grid: { left: 70, right: 30, top: 60, bottom: 55 },
    xAxis: {
      type: "value",
      name: "Brightness (photons per pulse)",
      nameLocation: "middle",
      nameGap: 32,
      min: ranges.xRange?.[0] ?? 0,
      max: ranges.xRange?.[1] ?? 0.45,
    },
    yAxis: {
      type: "value",
      name: "Mean wavepacket overlap",
      nameLocation: "middle",
      nameGap: 45,
      min: ranges.yRange?.[0] ?? 0.6,
      max: ranges.yRange?.[1] ?? 1.0,
    },
    series,
  };
}

/** Overlap ceiling and heralded g2 of a pair source against mean pairs per pulse. */
export function tradeoffFigure(curve: CurvePoint[], ranges: AxisRanges = {}): EChartsOption {
  if (curve.length === 0) {
    throw new DatasetError("trade-off dataset has no points");
  }
  const sorted = [...curve].sort((a, b) => a.meanPairs - b.meanPairs);
  const guide = {
    silent: true,
    symbol: "none",
    label: { formatter: String(GUIDE_MEAN_PAIRS), position: "insideEndTop" as const },
    lineStyle: { type: "dashed" as const, color: "#666", width: 1 },
    data: [{ xAxis: GUIDE_MEAN_PAIRS }],
  };
  return {
    animation: false,
    legend: { top: 8 },
    grid: { left: 70, right: 70, top: 60, bottom: 55 },
    xAxis: {
      type: "log",
      name: "Mean pairs per pulse",
      nameLocation: "middle",
      nameGap: 32,
      min: ranges.xRange?.[0] ?? sorted[0].meanPairs,
      max: ranges.xRange?.[1] ?? sorted[sorted.length - 1].meanPairs,
    },
    yAxis: [
      {
        type: "value",
        name: "Overlap ceiling",
        nameLocation: "middle",
        nameGap: 45,
        min: ranges.yRange?.[0] ?? 0.5,
        max: ranges.yRange?.[1] ?? 1.0,
      },
      {
        type: "value",
        name: "Heralded g2(0)",
        nameLocation: "middle",
        nameGap: 45,
        min: 0,
        max: Math.max(...sorted.map((p) => p.g2)) * 1.1,
      },
    ],
    series: [
      {
        type: "line",
        name: "overlap ceiling",
        showSymbol: false,
        yAxisIndex: 0,
        data: sorted.map((p) => [p.meanPairs, p.overlap]),
        markLine: guide,
      },
      {
        type: "line",
        name: "heralded g2(0)",
        showSymbol: false,
        yAxisIndex: 1,
        lineStyle: { type: "dotted" },
        data: sorted.map((p) => [p.meanPairs, p.g2]),
      },
    ],
  };
}

/** Coincidence counts against detection delay for a recorded histogram. */
export function histogramFigure(hist: Histogram, ranges: AxisRanges = {}): EChartsOption {
  const data = hist.delays.map((d, i) => [d, hist.counts[i]]);
  return {
    animation: false,
    grid: { left: 70, right: 30, top: 30, bottom: 55 },
    xAxis: {
      type: "value",
      name: "Delay (ns)",
      nameLocation: "middle",
      nameGap: 32,
      min: ranges.xRange?.[0] ?? hist.delays[0],
      max: ranges.xRange?.[1] ?? hist.delays[hist.delays.length - 1],
    },
    yAxis: {
      type: "value",
      name: "Coincidences",
      nameLocation: "middle",
      nameGap: 50,
      min: ranges.yRange?.[0] ?? 0,
      max: ranges.yRange?.[1],
    },
    series: [
      {
        type: "line",
        name: "coincidences",
        showSymbol: false,
        lineStyle: { width: 1 },
        areaStyle: { opacity: 0.25 },
        data,
      },
    ],
  };
}
