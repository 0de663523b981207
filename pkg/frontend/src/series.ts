/**
 * Figure-kind specific extraction of (x, y) series from the CSV.
 *
 * ber-curve:   x = snr_db column, y = ber column, one series per decoder.
 * flops-curve: x = the number after an `n=` tag in the decoder label
 *              (dimension is not a CSV column), y = avg_flops_decode.
 * rho-sweep:   x = the number after a `rho=` tag in the decoder label,
 *              y = ber; rows in file order, never sorted.
 */

import { columnIndex, CsvError, CsvTable } from './csv.js';

export type FigureKind = 'ber-curve' | 'flops-curve' | 'rho-sweep';

export const FIGURE_KINDS: FigureKind[] = ['ber-curve', 'flops-curve', 'rho-sweep'];

export interface SeriesPoint {
  x: string;
  y: string;
}

export interface Series {
  key: string;
  label: string;
  points: SeriesPoint[];
}

export type LabelMap = Record<string, string>;

function tagValue(label: string, tag: string): string {
  const re = new RegExp(`${tag}=([0-9eE.+-]+)`, 'g');
  let match: RegExpExecArray | null = null;
  let last: string | null = null;
  while ((match = re.exec(label)) !== null) {
    last = match[1];
  }
  if (last === null) {
    throw new CsvError(`decoder label '${label}' lacks the ${tag}= tag this figure kind needs`);
  }
  return last;
}

export function extractSeries(table: CsvTable, kind: FigureKind, labels: LabelMap = {}): Series[] {
  const decoderCol = columnIndex(table, 'decoder');
  let xOf: (row: string[]) => string;
  let yCol: number;
  if (kind === 'ber-curve') {
    const xCol = columnIndex(table, 'snr_db');
    yCol = columnIndex(table, 'ber');
    xOf = (row) => row[xCol];
  } else if (kind === 'flops-curve') {
    yCol = columnIndex(table, 'avg_flops_decode');
    xOf = (row) => tagValue(row[decoderCol], 'n');
  } else if (kind === 'rho-sweep') {
    yCol = columnIndex(table, 'ber');
    xOf = (row) => tagValue(row[decoderCol], 'rho');
  } else {
    throw new CsvError(`unknown figure kind '${kind}'`);
  }

  const order: string[] = [];
  const byKey = new Map<string, SeriesPoint[]>();
  for (const row of table.rows) {
    let key = row[decoderCol];
    if (kind === 'rho-sweep' || kind === 'flops-curve') {
      // tagged rows belong to one family: strip the tag suffix for grouping
      key = key.replace(/@?(n|rho)=[0-9eE.+-]+/g, '');
    }
    if (!byKey.has(key)) {
      byKey.set(key, []);
      order.push(key);
    }
    byKey.get(key)!.push({ x: xOf(row), y: row[yCol] });
  }
  return order.map((key) => ({
    key,
    label: labels[key] ?? key,
    points: byKey.get(key)!,
  }));
}

/** Plotted points, one `decoder,x,y` line per point, in input order. */
export function dumpPoints(series: Series[]): string {
  const lines: string[] = [];
  for (const s of series) {
    for (const p of s.points) {
      lines.push(`${s.key},${p.x},${p.y}`);
    }
  }
  return lines.join('\n') + '\n';
}
