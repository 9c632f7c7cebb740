import { describe, expect, it } from "vitest";

import { validateHeader } from "../src/contract.js";

const CANONICAL = ["t", "F", "P00", "P11", "PT", "PS", "n_c"];

describe("header contract", () => {
  it("accepts the canonical base header", () => {
    expect(validateHeader(CANONICAL).ok).toBe(true);
  });

  it("accepts optional mode and stderr columns", () => {
    const cols = [...CANONICAL, "n_c1", "n_c2", "stderr_F", "stderr_PS", "stderr_n_c"];
    expect(validateHeader(cols).ok).toBe(true);
  });

  it("accepts shuffled column order", () => {
    const cols = ["PS", "t", "n_c", "F", "PT", "P11", "P00", "stderr_F"];
    expect(validateHeader(cols).ok).toBe(true);
  });

  it("rejects a missing required column", () => {
    const res = validateHeader(CANONICAL.filter((c) => c !== "PS"));
    expect(res.ok).toBe(false);
    expect(res.errors.join(" ")).toContain("PS");
  });

  it("rejects unknown columns", () => {
    const res = validateHeader([...CANONICAL, "temperature"]);
    expect(res.ok).toBe(false);
    expect(res.errors.join(" ")).toContain("temperature");
  });

  it("rejects stderr of a column outside the contract", () => {
    const res = validateHeader([...CANONICAL, "stderr_bogus"]);
    expect(res.ok).toBe(false);
  });

  it("rejects stderr of the time axis", () => {
    expect(validateHeader([...CANONICAL, "stderr_t"]).ok).toBe(false);
  });

  it("rejects duplicates", () => {
    expect(validateHeader([...CANONICAL, "F"]).ok).toBe(false);
  });
});
