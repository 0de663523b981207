/**
 * Parsing for the simulation CSV contract.
 *
 * Cells are kept as raw strings so a dump of plotted points can reproduce
 * the input byte-for-byte; numeric views are derived on demand.
 */

export class CsvError extends Error {}

export interface CsvTable {
  header: string[];
  rows: string[][];
  comments: string[];
}

export function parseCsv(text: string): CsvTable {
  const comments: string[] = [];
  const lines = text
    .split(/\r?\n/)
    .filter((line) => line.length > 0)
    .filter((line) => {
      if (line.startsWith('#')) {
        comments.push(line);
        return false;
      }
      return true;
    });
  if (lines.length === 0) {
    throw new CsvError('empty CSV: no header row');
  }
  const header = lines[0].split(',');
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(',');
    if (cells.length !== header.length) {
      throw new CsvError(`row ${i + 1} has ${cells.length} cells, header has ${header.length}`);
    }
    return cells;
  });
  return { header, rows, comments };
}

export function columnIndex(table: CsvTable, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new CsvError(`missing column '${name}' (header: ${table.header.join(',')})`);
  }
  return idx;
}

/** Concatenate tables row-wise; headers must match exactly. */
export function mergeTables(tables: CsvTable[]): CsvTable {
  const [first, ...rest] = tables;
  for (const t of rest) {
    if (t.header.join(',') !== first.header.join(',')) {
      throw new CsvError('cannot overlay CSVs with different headers');
    }
  }
  return {
    header: first.header,
    rows: tables.flatMap((t) => t.rows),
    comments: tables.flatMap((t) => t.comments),
  };
}
