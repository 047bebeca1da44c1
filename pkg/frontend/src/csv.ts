/**
 * CSV loading against the simulator CLI's documented column schemas.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export type Row = Record<string, string>;

export class SchemaError extends Error {}

/** Parse a CSV file and check the header carries every required column. */
export function loadCsv(path: string, requiredColumns: string[]): Row[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${path}: CSV parse error: ${first.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = requiredColumns.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${path}: missing columns: ${missing.join(", ")}`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return parsed.data;
}

export function num(row: Row, column: string): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`non-numeric value ${JSON.stringify(row[column])} in column ${column}`);
  }
  return value;
}
