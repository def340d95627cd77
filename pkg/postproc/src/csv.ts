import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: string[][];
}

/** Parse a simple comma-separated file with a mandatory header row. */
export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf-8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty file, expected a CSV header`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line) => line.split(",").map((c) => c.trim()));
  return { columns, rows };
}

/** Numeric column accessor; throws an actionable error naming missing columns. */
export function numericColumn(table: Table, name: string, path: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(
      `${path}: missing column '${name}' (found: ${table.columns.join(", ")})`,
    );
  }
  return table.rows.map((row) => Number(row[idx]));
}

export function stringColumn(table: Table, name: string, path: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(
      `${path}: missing column '${name}' (found: ${table.columns.join(", ")})`,
    );
  }
  return table.rows.map((row) => row[idx]);
}

export function requireColumns(table: Table, names: string[], path: string): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new Error(
        `${path}: missing column '${name}' (found: ${table.columns.join(", ")})`,
      );
    }
  }
}
