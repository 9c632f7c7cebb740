import { describe, expect, it } from "vitest";

import { ArtifactError, parseTimeSeries } from "../src/csv.js";

const HEADER = "t,F,P00,P11,PT,PS,n_c";

function rows(...lines: string[]): string {
  return [HEADER, ...lines].join("\n");
}

describe("time-series parsing", () => {
  it("parses numeric data", () => {
    const tab = parseTimeSeries(rows("0,0.1,1,0,0,0,0", "1,0.2,0.9,0.05,0.03,0.02,0.001"));
    expect(tab.length).toBe(2);
    expect(tab.data.get("F")![1]).toBeCloseTo(0.2);
  });

  it("rejects contract violations", () => {
    expect(() => parseTimeSeries("t,F,bogus\n0,1,2")).toThrow(ArtifactError);
  });

  it("rejects non-numeric cells", () => {
    expect(() => parseTimeSeries(rows("0,a,1,0,0,0,0"))).toThrow(/non-numeric/);
  });

  it("rejects ragged rows", () => {
    expect(() => parseTimeSeries(rows("0,0.1,1,0,0,0"))).toThrow(/fields/);
  });

  it("rejects empty files", () => {
    expect(() => parseTimeSeries(HEADER)).toThrow(/no data rows/);
  });

  it("rejects non-increasing time", () => {
    expect(() =>
      parseTimeSeries(rows("0,0.1,1,0,0,0,0", "0,0.2,1,0,0,0,0")),
    ).toThrow(/increasing/);
  });
});
