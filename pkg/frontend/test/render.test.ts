import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { runCli } from "../src/cli.js";
import { parseTimeSeries } from "../src/csv.js";
import { builtinFigure, GAMMA_VALUES } from "../src/figures.js";
import { renderFigure } from "../src/render.js";

const FIXTURES = join(__dirname, "..", "fixtures");

function synthetic(columns: string[], n = 40): string {
  const lines = [columns.join(",")];
  for (let i = 0; i < n; i++) {
    const t = i * 1.5;
    const vals = columns.map((c) => {
      if (c === "t") return t;
      if (c.startsWith("stderr_")) return 0.01;
      if (c === "F") return 1 - Math.exp(-t / 20);
      if (c === "n_c") return 0.01 * Math.exp(-t / 30);
      return 0.25 + 0.1 * Math.sin(t / 7 + c.length);
    });
    lines.push(vals.map((v) => String(v)).join(","));
  }
  return lines.join("\n");
}

const BASE = ["t", "F", "P00", "P11", "PT", "PS", "n_c"];

describe("renderer", () => {
  it("is deterministic", () => {
    const tab = parseTimeSeries(synthetic(BASE));
    const fig = builtinFigure("fig4a");
    const tables = new Map([["fig4a", tab]]);
    const a = renderFigure(fig.spec, tables);
    const b = renderFigure(fig.spec, tables);
    expect(a).toBe(b);
    expect(a.startsWith("<svg")).toBe(true);
  });

  it("draws five series across the fig4 panels", () => {
    const tab = parseTimeSeries(synthetic(BASE));
    const fig = builtinFigure("fig4a");
    const svg = renderFigure(fig.spec, new Map([["fig4a", tab]]));
    expect(svg.match(/class="series"/g)?.length).toBe(5);
  });

  it("selects columns by name, not position", () => {
    const shuffled = ["PS", "P00", "t", "n_c", "F", "PT", "P11"];
    const a = parseTimeSeries(synthetic(BASE));
    const lines = synthetic(BASE).split("\n");
    const idx = shuffled.map((c) => BASE.indexOf(c));
    const reordered = [
      shuffled.join(","),
      ...lines.slice(1).map((ln) => {
        const parts = ln.split(",");
        return idx.map((j) => parts[j]).join(",");
      }),
    ].join("\n");
    const b = parseTimeSeries(reordered);
    const fig = builtinFigure("fig4a");
    expect(renderFigure(fig.spec, new Map([["fig4a", a]])))
      .toBe(renderFigure(fig.spec, new Map([["fig4a", b]])));
  });

  it("draws stderr bands only when stderr columns exist", () => {
    const plain = parseTimeSeries(synthetic(BASE));
    const withSe = parseTimeSeries(synthetic([...BASE, "stderr_F"]));
    const fig = builtinFigure("fig4a");
    const svgPlain = renderFigure(fig.spec, new Map([["fig4a", plain]]));
    const svgBands = renderFigure(fig.spec, new Map([["fig4a", withSe]]));
    expect(svgPlain.includes('class="band"')).toBe(false);
    expect(svgBands.match(/class="band"/g)?.length).toBe(1);
  });

  it("refuses unknown inputs", () => {
    const fig = builtinFigure("fig4a");
    expect(() => renderFigure(fig.spec, new Map())).toThrow(/unknown input/);
  });
});

describe("cli on shipped fixtures", () => {
  const available = existsSync(join(FIXTURES, "fig4a.csv"));

  it.skipIf(!available)("renders fig4a, fig4b and fig5", () => {
    const out = mkdtempSync(join(tmpdir(), "nvfig-"));
    for (const fig of ["fig4a", "fig4b", "fig5"]) {
      const code = runCli(["render", "--fig", fig, "--in", FIXTURES,
                           "--out", join(out, `${fig}.svg`)]);
      expect(code).toBe(0);
      const svg = readFileSync(join(out, `${fig}.svg`), "utf-8");
      expect(svg).toContain("</svg>");
      if (fig === "fig5") {
        expect(svg.match(/class="series"/g)?.length).toBe(GAMMA_VALUES.length);
        expect(svg.match(/class="legend"/g)?.length).toBe(GAMMA_VALUES.length);
      }
    }
  });

  it.skipIf(!available)("fig4 fixtures carry stderr bands (trajectory runs)", () => {
    const out = mkdtempSync(join(tmpdir(), "nvfig-"));
    const code = runCli(["render", "--fig", "fig4a", "--in", FIXTURES,
                         "--out", join(out, "fig4a.svg")]);
    expect(code).toBe(0);
    const svg = readFileSync(join(out, "fig4a.svg"), "utf-8");
    expect(svg.match(/class="band"/g)?.length).toBe(5);
  });

  it("rejects a contract-violating CSV with exit code 2", () => {
    const dir = mkdtempSync(join(tmpdir(), "nvfig-bad-"));
    writeFileSync(join(dir, "fig4a.csv"), "t,F,weird\n0,1,2\n1,1,2\n");
    const code = runCli(["render", "--fig", "fig4a", "--in", dir,
                         "--out", join(dir, "out.svg")]);
    expect(code).toBe(2);
  });

  it("rejects a missing file with exit code 2", () => {
    const dir = mkdtempSync(join(tmpdir(), "nvfig-empty-"));
    const code = runCli(["render", "--fig", "fig4b", "--in", dir,
                         "--out", join(dir, "out.svg")]);
    expect(code).toBe(2);
  });

  it("renders from a custom spec file", () => {
    const dir = mkdtempSync(join(tmpdir(), "nvfig-spec-"));
    writeFileSync(join(dir, "data.csv"), synthetic(BASE));
    const spec = {
      inputs: { d: "data.csv" },
      panels: [{
        title: "custom",
        series: [{ input: "d", column: "F", label: "F" }],
        xLabel: "t",
        yLabel: "F",
      }],
    };
    writeFileSync(join(dir, "spec.json"), JSON.stringify(spec));
    const code = runCli(["render", "--spec", join(dir, "spec.json"),
                         "--in", dir, "--out", join(dir, "c.svg")]);
    expect(code).toBe(0);
    expect(readFileSync(join(dir, "c.svg"), "utf-8")).toContain('class="series"');
  });
});
