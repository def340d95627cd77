import { basename } from "node:path";
import { writeFileSync } from "node:fs";
import { numericColumn, readCsv, requireColumns, stringColumn } from "./csv.js";
import { ChartSpec, Series, renderChart } from "./chart.js";

export const PLOT_KINDS = ["nu", "convergence", "midline", "delta", "kappa"] as const;
export type PlotKind = (typeof PLOT_KINDS)[number];

/** Steady-state Nusselt references drawn on the Nu evolution plot. */
export const NU_REFERENCES = [
  { value: 8.97, label: "ref 8.97" },
  { value: 8.828, label: "ref 8.828" },
  { value: 8.8, label: "ref 8.8" },
];

function label(path: string): string {
  return basename(path).replace(/\.csv$/, "");
}

function nuSpec(inputs: string[]): ChartSpec {
  const series: Series[] = inputs.map((path) => {
    const table = readCsv(path);
    requireColumns(table, ["step", "t", "Nu"], path);
    return { label: label(path), x: numericColumn(table, "t", path), y: numericColumn(table, "Nu", path) };
  });
  return {
    title: "Average Nusselt number over time",
    xLabel: "t",
    yLabel: "Nu",
    series,
    refLines: NU_REFERENCES,
  };
}

function convergenceSpec(inputs: string[]): ChartSpec {
  const series: Series[] = [];
  for (const path of inputs) {
    const table = readCsv(path);
    requireColumns(table, ["N", "Nu", "time_total"], path);
    const n = numericColumn(table, "N", path);
    series.push({ label: `${label(path)} Nu`, x: n, y: numericColumn(table, "Nu", path) });
    const seconds = numericColumn(table, "time_total", path);
    const nuRange = numericColumn(table, "Nu", path).filter(Number.isFinite);
    const lo = Math.min(...nuRange);
    const hi = Math.max(...nuRange);
    const tLo = Math.min(...seconds.filter(Number.isFinite));
    const tHi = Math.max(...seconds.filter(Number.isFinite));
    const scaled = seconds.map((s) => lo + ((s - tLo) / (tHi - tLo || 1)) * (hi - lo || 1));
    series.push({ label: `${label(path)} time (scaled)`, x: n, y: scaled, kind: "line" });
  }
  return {
    title: "Nusselt convergence and execution time vs node count",
    xLabel: "N",
    yLabel: "Nu / scaled time",
    series,
    logX: true,
  };
}

function midlineSpec(inputs: string[]): ChartSpec {
  const series: Series[] = inputs.map((path) => {
    const table = readCsv(path);
    requireColumns(table, ["x", "y", "v", "h"], path);
    const x = numericColumn(table, "x", path);
    const y = numericColumn(table, "y", path);
    const v = numericColumn(table, "v", path);
    const h = numericColumn(table, "h", path);
    const pick: Array<[number, number]> = [];
    for (let i = 0; i < x.length; i++) {
      if (Math.abs(y[i] - 0.5) <= h[i]) pick.push([x[i], v[i]]);
    }
    pick.sort((a, b) => a[0] - b[0]);
    return {
      label: label(path),
      x: pick.map((p) => p[0]),
      y: pick.map((p) => p[1]),
      kind: "points" as const,
    };
  });
  return {
    title: "Vertical velocity near the horizontal midline (|y - 0.5| <= h)",
    xLabel: "x",
    yLabel: "v",
    series,
  };
}

function deltaSpec(inputs: string[]): ChartSpec {
  const series: Series[] = inputs.map((path) => {
    const table = readCsv(path);
    requireColumns(table, ["parameter", "Nu"], path);
    return {
      label: label(path),
      x: numericColumn(table, "parameter", path),
      y: numericColumn(table, "Nu", path),
    };
  });
  return {
    title: "Steady Nusselt number vs scattered-layer width",
    xLabel: "delta_h",
    yLabel: "Nu",
    series,
  };
}

function kappaSpec(inputs: string[]): ChartSpec {
  const series: Series[] = [];
  const colorBy: number[][] = [];
  for (const path of inputs) {
    const table = readCsv(path);
    requireColumns(table, ["x", "y", "method", "kappa"], path);
    const x = numericColumn(table, "x", path);
    const y = numericColumn(table, "y", path);
    const kappa = numericColumn(table, "kappa", path);
    const method = stringColumn(table, "method", path);
    for (const m of ["mon", "rbffd"]) {
      const idx = method.map((v, i) => (v === m ? i : -1)).filter((i) => i >= 0);
      series.push({
        label: `${m} (${label(path)})`,
        x: idx.map((i) => x[i]),
        y: idx.map((i) => y[i]),
        kind: "points",
      });
      colorBy.push(idx.map((i) => Math.log10(Math.max(kappa[i], 1))));
    }
  }
  return {
    title: "Condition number map, log10 kappa of the local systems",
    xLabel: "x",
    yLabel: "y",
    series,
    colorBy,
  };
}

const BUILDERS: Record<PlotKind, (inputs: string[]) => ChartSpec> = {
  nu: nuSpec,
  convergence: convergenceSpec,
  midline: midlineSpec,
  delta: deltaSpec,
  kappa: kappaSpec,
};

/** Render one plot kind from its input CSVs and write the SVG. */
export function plot(kind: PlotKind, inputs: string[], outPath: string): string {
  const builder = BUILDERS[kind];
  if (!builder) {
    throw new Error(`unknown plot kind '${kind}'; expected one of ${PLOT_KINDS.join(", ")}`);
  }
  const svg = renderChart(builder(inputs));
  writeFileSync(outPath, svg);
  return svg;
}
