import { describe, expect, it } from "vitest";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { PLOT_KINDS, plot } from "../src/plots.js";

const SAMPLES = join(dirname(fileURLToPath(import.meta.url)), "..", "sample-data");

const SAMPLE_INPUTS: Record<string, string[]> = {
  nu: [join(SAMPLES, "nu_series.csv")],
  convergence: [join(SAMPLES, "sweep.csv")],
  midline: [
    join(SAMPLES, "fields_hybrid.csv"),
    join(SAMPLES, "fields_regular.csv"),
    join(SAMPLES, "fields_scattered.csv"),
  ],
  delta: [join(SAMPLES, "delta_sweep.csv")],
  kappa: [join(SAMPLES, "weights_diag.csv")],
};

function outFile(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "plots-")), name);
}

describe("bundled sample rendering", () => {
  for (const kind of PLOT_KINDS) {
    it(`renders the ${kind} plot from bundled CSVs`, () => {
      const svg = plot(kind, SAMPLE_INPUTS[kind], outFile(`${kind}.svg`));
      expect(svg).toContain("<svg");
      expect(svg).toContain("</svg>");
    });
  }

  it("the Nu plot contains exactly three reference lines at 8.97, 8.828, 8.8", () => {
    const svg = plot("nu", SAMPLE_INPUTS.nu, outFile("nu.svg"));
    const refs = svg.match(/class="refline"/g) ?? [];
    expect(refs).toHaveLength(3);
    expect(svg).toContain("8.97");
    expect(svg).toContain("8.828");
    expect(svg).toContain("8.8");
  });

  it("midline overlays one labeled series per input run", () => {
    const svg = plot("midline", SAMPLE_INPUTS.midline, outFile("mid.svg"));
    expect(svg).toContain("fields_hybrid");
    expect(svg).toContain("fields_regular");
    expect(svg).toContain("fields_scattered");
  });
});

describe("contract behaviour", () => {
  it("is deterministic for identical inputs", () => {
    const a = plot("nu", SAMPLE_INPUTS.nu, outFile("a.svg"));
    const b = plot("nu", SAMPLE_INPUTS.nu, outFile("b.svg"));
    expect(a).toBe(b);
  });

  it("an empty series still renders axes and a no-data annotation", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-empty-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "step,t,Nu\n");
    const svg = plot("nu", [empty], join(dir, "empty.svg"));
    expect(svg).toContain("no data");
    expect(svg).toContain("<rect");
  });

  it("schema mismatch names the missing column", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-schema-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "step,time,Nu\n1,0.1,8.9\n");
    expect(() => plot("nu", [bad], join(dir, "bad.svg"))).toThrowError(/'t'/);
  });
});
