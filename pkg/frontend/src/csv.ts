/**
 * Strict CSV reading for the simulator's result files.
 *
 * The harness never quotes fields, so a plain split is exact. Schema
 * validation reports the first missing column by name.
 */

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `row ${i + 1}: expected ${columns.length} cells, got ${cells.length}`,
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((col, j) => (row[col] = cells[j]));
    return row;
  });
  return { columns, rows };
}

export function requireColumns(table: Table, required: readonly string[], figId: string): void {
  for (const col of required) {
    if (!table.columns.includes(col)) {
      throw new SchemaError(`${figId}: missing column '${col}'`);
    }
  }
  if (table.rows.length === 0) {
    throw new SchemaError(`${figId}: no data rows`);
  }
}

export function numeric(row: Record<string, string>, column: string): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`column '${column}': non-numeric value '${row[column]}'`);
  }
  return value;
}
