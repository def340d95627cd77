/** Minimal deterministic SVG chart builder (no DOM, no timestamps). */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  kind?: "line" | "points";
  color?: string;
}

export interface RefLine {
  value: number;
  label: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  refLines?: RefLine[];
  logX?: boolean;
  /** Color points by a per-point scalar instead of per-series colors. */
  colorBy?: number[][];
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 72, right: 24, top: 40, bottom: 56 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  return [lo, hi];
}

function ticks(lo: number, hi: number, n = 6): number[] {
  const span = hi - lo;
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

function viridis(t: number): string {
  // coarse 6-stop approximation; enough for a kappa heat map
  const stops: [number, number, number][] = [
    [68, 1, 84], [65, 68, 135], [42, 120, 142],
    [34, 168, 132], [122, 209, 81], [253, 231, 37],
  ];
  const u = Math.min(Math.max(t, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(u), stops.length - 2);
  const f = u - i;
  const mix = stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

/** Render the chart spec to a standalone SVG string. */
export function renderChart(spec: ChartSpec): string {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const allX = spec.series.flatMap((s) => s.x);
  const allY = spec.series.flatMap((s) => s.y).concat(
    (spec.refLines ?? []).map((r) => r.value),
  );
  const hasData = spec.series.some((s) => s.x.length > 0);

  const tx = spec.logX ? (v: number) => Math.log10(v) : (v: number) => v;
  let [x0, x1] = extent(allX.map(tx));
  let [y0, y1] = extent(allY);
  const padY = 0.06 * (y1 - y0);
  y0 -= padY;
  y1 += padY;
  const sx = (v: number) => MARGIN.left + ((tx(v) - x0) / (x1 - x0)) * innerW;
  const sy = (v: number) => MARGIN.top + innerH - ((v - y0) / (y1 - y0)) * innerH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="15">${spec.title}</text>`,
  );
  // axes box
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" ` +
    `fill="none" stroke="#444"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + innerW / 2}" y="${HEIGHT - 12}" text-anchor="middle">` +
    `${spec.xLabel}</text>`,
  );
  parts.push(
    `<text transform="rotate(-90 16 ${MARGIN.top + innerH / 2})" x="16" ` +
    `y="${MARGIN.top + innerH / 2}" text-anchor="middle">${spec.yLabel}</text>`,
  );

  if (!hasData) {
    parts.push(
      `<text x="${WIDTH / 2}" y="${HEIGHT / 2}" text-anchor="middle" fill="#888" ` +
      `font-size="16">no data</text>`,
    );
    parts.push("</svg>");
    return parts.join("\n");
  }

  for (const t of ticks(x0, x1)) {
    const px = MARGIN.left + ((t - x0) / (x1 - x0)) * innerW;
    parts.push(`<line x1="${px}" y1="${MARGIN.top + innerH}" x2="${px}" ` +
      `y2="${MARGIN.top + innerH + 5}" stroke="#444"/>`);
    const label = spec.logX ? `1e${fmt(t)}` : fmt(t);
    parts.push(`<text x="${px}" y="${MARGIN.top + innerH + 20}" ` +
      `text-anchor="middle">${label}</text>`);
  }
  for (const t of ticks(y0, y1)) {
    const py = sy(t);
    parts.push(`<line x1="${MARGIN.left - 5}" y1="${py}" x2="${MARGIN.left}" ` +
      `y2="${py}" stroke="#444"/>`);
    parts.push(`<text x="${MARGIN.left - 9}" y="${py + 4}" text-anchor="end">${fmt(t)}</text>`);
  }

  for (const ref of spec.refLines ?? []) {
    const py = sy(ref.value);
    parts.push(
      `<line class="refline" x1="${MARGIN.left}" y1="${py}" ` +
      `x2="${MARGIN.left + innerW}" y2="${py}" stroke="#999" stroke-dasharray="6 4"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left + innerW - 4}" y="${py - 4}" text-anchor="end" ` +
      `fill="#666">${ref.label}</text>`,
    );
  }

  spec.series.forEach((s, si) => {
    const color = s.color ?? PALETTE[si % PALETTE.length];
    if ((s.kind ?? "line") === "line") {
      const pts = s.x.map((v, i) => `${sx(v).toFixed(2)},${sy(s.y[i]).toFixed(2)}`);
      parts.push(
        `<polyline fill="none" stroke="${color}" stroke-width="1.6" points="${pts.join(" ")}"/>`,
      );
    } else {
      const colors = spec.colorBy?.[si];
      let lo = 0;
      let hi = 1;
      if (colors) {
        [lo, hi] = extent(colors);
      }
      s.x.forEach((v, i) => {
        const fill = colors
          ? viridis((colors[i] - lo) / (hi - lo || 1))
          : color;
        parts.push(
          `<circle cx="${sx(v).toFixed(2)}" cy="${sy(s.y[i]).toFixed(2)}" r="2.4" ` +
          `fill="${fill}"/>`,
        );
      });
    }
    const ly = MARGIN.top + 16 + 16 * si;
    parts.push(`<line x1="${MARGIN.left + 8}" y1="${ly - 4}" x2="${MARGIN.left + 30}" ` +
      `y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${MARGIN.left + 36}" y="${ly}">${s.label}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}
