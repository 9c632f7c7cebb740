/**
 * The CSV column contract shared with the simulator CLI.
 *
 * A time-series artifact always carries the seven base columns; trajectory
 * runs append stderr_* columns and multi-mode runs append n_c1/n_c2.
 * Any column outside this vocabulary means the file is not one of ours and
 * the renderer must refuse it rather than guess.
 */

export const BASE_COLUMNS = ["t", "F", "P00", "P11", "PT", "PS", "n_c"] as const;
export const OPTIONAL_COLUMNS = ["n_c1", "n_c2"] as const;

const STDERR_BASES = new Set<string>([
  ...BASE_COLUMNS.filter((c) => c !== "t"),
  ...OPTIONAL_COLUMNS,
]);

export interface ContractCheck {
  ok: boolean;
  errors: string[];
}

export function validateHeader(columns: string[]): ContractCheck {
  const errors: string[] = [];
  const seen = new Set<string>();
  for (const col of columns) {
    if (seen.has(col)) errors.push(`duplicate column '${col}'`);
    seen.add(col);
  }
  for (const required of BASE_COLUMNS) {
    if (!seen.has(required)) errors.push(`missing required column '${required}'`);
  }
  for (const col of columns) {
    if ((BASE_COLUMNS as readonly string[]).includes(col)) continue;
    if ((OPTIONAL_COLUMNS as readonly string[]).includes(col)) continue;
    if (col.startsWith("stderr_") && STDERR_BASES.has(col.slice("stderr_".length))) {
      continue;
    }
    errors.push(`unknown column '${col}' violates the artifact contract`);
  }
  return { ok: errors.length === 0, errors };
}

export function stderrColumn(series: string, columns: string[]): string | null {
  const name = `stderr_${series}`;
  return columns.includes(name) ? name : null;
}
