/** CSV loading and validation for simulator time-series artifacts. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

import { validateHeader } from "./contract.js";

export class ArtifactError extends Error {}

export interface TimeSeriesTable {
  columns: string[];
  /** column name -> values, aligned with `t` */
  data: Map<string, Float64Array>;
  length: number;
}

export function parseTimeSeries(text: string, source = "<memory>"): TimeSeriesTable {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new ArtifactError(`${source}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length < 2) {
    throw new ArtifactError(`${source}: no data rows`);
  }
  const columns = rows[0].map((c) => c.trim());
  const check = validateHeader(columns);
  if (!check.ok) {
    throw new ArtifactError(`${source}: ${check.errors.join("; ")}`);
  }
  const n = rows.length - 1;
  const data = new Map<string, Float64Array>(
    columns.map((c) => [c, new Float64Array(n)]),
  );
  for (let i = 0; i < n; i++) {
    const row = rows[i + 1];
    if (row.length !== columns.length) {
      throw new ArtifactError(`${source}: row ${i + 2} has ${row.length} fields, expected ${columns.length}`);
    }
    for (let j = 0; j < columns.length; j++) {
      const v = Number(row[j]);
      if (!Number.isFinite(v)) {
        throw new ArtifactError(`${source}: non-numeric value '${row[j]}' in column '${columns[j]}' row ${i + 2}`);
      }
      data.get(columns[j])![i] = v;
    }
  }
  const t = data.get("t")!;
  for (let i = 1; i < n; i++) {
    if (!(t[i] > t[i - 1])) {
      throw new ArtifactError(`${source}: time grid is not strictly increasing at row ${i + 2}`);
    }
  }
  return { columns, data, length: n };
}

export function loadTimeSeries(path: string): TimeSeriesTable {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new ArtifactError(`cannot read ${path}: ${(err as Error).message}`);
  }
  return parseTimeSeries(text, path);
}
