import { FIGURE_KINDS, render, type FigureKind, type PlotSpec } from "./render.js";

const USAGE = `usage: figure <kind> <dataset> <output.svg> [options]

kinds: ${FIGURE_KINDS.join(", ")}

options:
  --width N    image width in pixels (default 900)
  --height N   image height in pixels (default 600)
  --x-min V --x-max V   override the x axis range
  --y-min V --y-max V   override the y axis range
`;

function takeNumber(args: string[], i: number, flag: string): number {
  const raw = args[i];
  const value = Number(raw);
  if (raw === undefined || Number.isNaN(value)) {
    throw new Error(`${flag} expects a number, got '${raw}'`);
  }
  return value;
}

export function parseArgs(args: string[]): PlotSpec {
  const positional: string[] = [];
  let width: number | undefined;
  let height: number | undefined;
  let xMin: number | undefined;
  let xMax: number | undefined;
  let yMin: number | undefined;
  let yMax: number | undefined;
  for (let i = 0; i < args.length; i++) {
    const arg = args[i];
    if (arg === "--width") width = takeNumber(args, ++i, arg);
    else if (arg === "--height") height = takeNumber(args, ++i, arg);
    else if (arg === "--x-min") xMin = takeNumber(args, ++i, arg);
    else if (arg === "--x-max") xMax = takeNumber(args, ++i, arg);
    else if (arg === "--y-min") yMin = takeNumber(args, ++i, arg);
    else if (arg === "--y-max") yMax = takeNumber(args, ++i, arg);
    else if (arg.startsWith("--")) throw new Error(`unknown option '${arg}'`);
    else positional.push(arg);
  }
  if (positional.length !== 3) {
    throw new Error("expected exactly three arguments: <kind> <dataset> <output.svg>");
  }
  const [kind, datasetPath, outputPath] = positional;
  if (!FIGURE_KINDS.includes(kind as FigureKind)) {
    throw new Error(`unknown figure kind '${kind}' (expected one of: ${FIGURE_KINDS.join(", ")})`);
  }
  if ((xMin === undefined) !== (xMax === undefined) || (yMin === undefined) !== (yMax === undefined)) {
    throw new Error("axis overrides need both a min and a max");
  }
  return {
    kind: kind as FigureKind,
    datasetPath,
    outputPath,
    width,
    height,
    xRange: xMin !== undefined && xMax !== undefined ? [xMin, xMax] : undefined,
    yRange: yMin !== undefined && yMax !== undefined ? [yMin, yMax] : undefined,
  };
}

export function main(args: string[]): number {
  if (args.length === 0 || args.includes("--help")) {
    console.log(USAGE);
    return args.length === 0 ? 1 : 0;
  }
  try {
    const spec = parseArgs(args);
    const result = render(spec);
    console.log(`wrote ${result.width}x${result.height} ${spec.kind} figure to ${spec.outputPath}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

const invokedAs = process.argv[1] ?? "";
if (invokedAs.endsWith("cli.js") || invokedAs.endsWith("cli.ts")) {
  process.exitCode = main(process.argv.slice(2));
}
