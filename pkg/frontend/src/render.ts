/** Ties CSV parsing, series extraction and SVG generation together. */

import { readFileSync } from 'fs';

import { CsvError, mergeTables, parseCsv } from './csv.js';
import { dumpPoints, extractSeries, FigureKind, LabelMap, Series } from './series.js';
import { renderSvg } from './svg.js';

export interface RenderResult {
  svg: string;
  series: Series[];
  points: string;
}

const AXIS_TEXT: Record<FigureKind, { title: string; x: string; y: string; annotate: boolean }> = {
  'ber-curve': { title: 'Bit error rate vs. SNR per bit', x: 'SNR per bit (dB)', y: 'BER', annotate: false },
  'flops-curve': { title: 'Decode cost vs. dimension', x: 'lattice dimension n', y: 'avg flops per decode', annotate: false },
  'rho-sweep': { title: 'Bit error rate vs. sampler confidence', x: 'rho', y: 'BER', annotate: true },
};

export function renderFromText(texts: string[], kind: FigureKind, labels: LabelMap = {}): RenderResult {
  const table = mergeTables(texts.map(parseCsv));
  const series = extractSeries(table, kind, labels);
  if (series.some((s) => s.points.length < 1)) {
    throw new CsvError('every requested decoder needs at least one row');
  }
  const axis = AXIS_TEXT[kind];
  const svg = renderSvg(series, {
    title: axis.title,
    xLabel: axis.x,
    yLabel: axis.y,
    annotateMinimum: axis.annotate,
  });
  return { svg, series, points: dumpPoints(series) };
}

export function renderFromFiles(paths: string[], kind: FigureKind, labels: LabelMap = {}): RenderResult {
  const texts = paths.map((p) => readFileSync(p, 'utf8'));
  return renderFromText(texts, kind, labels);
}
