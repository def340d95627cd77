import { PLOT_KINDS, PlotKind, plot } from "./plots.js";

function usage(): string {
  return `usage: plot --kind {${PLOT_KINDS.join(",")}} --in <csv...> --out <img.svg>`;
}

export function main(argv: string[]): number {
  let kind: string | undefined;
  const inputs: string[] = [];
  let out: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--kind") {
      kind = argv[++i];
    } else if (arg === "--in") {
      while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
        inputs.push(argv[++i]);
      }
    } else if (arg === "--out") {
      out = argv[++i];
    } else if (arg === "--help" || arg === "-h") {
      console.log(usage());
      return 0;
    } else {
      console.error(`unknown argument '${arg}'\n${usage()}`);
      return 2;
    }
  }
  if (!kind || !out || inputs.length === 0) {
    console.error(usage());
    return 2;
  }
  if (!(PLOT_KINDS as readonly string[]).includes(kind)) {
    console.error(`unknown plot kind '${kind}'; expected one of ${PLOT_KINDS.join(", ")}`);
    return 2;
  }
  try {
    plot(kind as PlotKind, inputs, out);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
  console.log(`wrote ${out}`);
  return 0;
}

process.exitCode = main(process.argv.slice(2));
