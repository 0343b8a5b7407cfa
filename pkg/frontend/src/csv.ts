/**
 * Reader for the simulator's CSV contract: one '#'-prefixed provenance
 * line, one header line of column names, then numeric comma-separated
 * rows.  The helper never computes physics; it only checks the schema
 * and hands the values to the figure builders.
 */

export interface CsvTable {
  provenance: string;
  columns: string[];
  rows: number[][];
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error('empty file: expected a provenance line and a header');
  }
  let provenance = '';
  let start = 0;
  if (lines[0].startsWith('#')) {
    provenance = lines[0].slice(1).trim();
    start = 1;
  }
  if (lines.length <= start) {
    throw new Error('missing header line of column names');
  }
  const columns = lines[start].split(',').map((c) => c.trim());
  const rows: number[][] = [];
  for (const line of lines.slice(start + 1)) {
    const cells = line.split(',');
    if (cells.length !== columns.length) {
      throw new Error(
        `row has ${cells.length} cells but the header names ${columns.length} columns`,
      );
    }
    rows.push(
      cells.map((cell, i) => {
        const v = Number(cell);
        if (!Number.isFinite(v)) {
          throw new Error(`column "${columns[i]}" holds a non-numeric value: ${cell}`);
        }
        return v;
      }),
    );
  }
  if (rows.length === 0) {
    throw new Error('no data rows: refusing to emit an empty figure');
  }
  return { provenance, columns, rows };
}

/** Index of a required column; the error names the missing column. */
export function columnIndex(table: CsvTable, name: string): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing required column "${name}" (have: ${table.columns.join(', ')})`);
  }
  return idx;
}

export function column(table: CsvTable, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((row) => row[idx]);
}
