/**
 * Strict reader for the experiment CSVs: UTF-8, header row, comma separator,
 * no quoting (the writers never emit quoted fields).
 */

import { readFileSync } from "fs";

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: string[][];
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
        `row ${i + 2} has ${cells.length} fields, header has ${columns.length}`,
      );
    }
    return cells;
  });
  return { columns, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"));
}

/** Index of a required column; names the column when absent. */
export function columnIndex(table: Table, name: string): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing required column "${name}"`);
  }
  return idx;
}

/** Numeric cell value; empty cells (gaps) come back as null. */
export function numberAt(row: string[], idx: number): number | null {
  const cell = row[idx];
  if (cell === "" || cell === undefined) {
    return null;
  }
  if (cell === "inf") {
    return Infinity;
  }
  const value = Number(cell);
  if (Number.isNaN(value)) {
    throw new SchemaError(`cell "${cell}" is not numeric`);
  }
  return value;
}
