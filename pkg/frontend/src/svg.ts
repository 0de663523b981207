/**
 * Minimal SVG chart rendering: one polyline per series, linear x axis,
 * log10 y axis (the natural scale for error rates and operation counts).
 * No sorting or smoothing: points are connected in input order.
 */

import { Series } from './series.js';

export interface FigureOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  annotateMinimum?: boolean;
}

const COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#17becf'];
const MARGIN = { left: 70, right: 24, top: 36, bottom: 48 };

interface NumPoint {
  x: number;
  y: number;
}

function numeric(series: Series[]): Map<string, NumPoint[]> {
  const out = new Map<string, NumPoint[]>();
  for (const s of series) {
    out.set(
      s.key,
      s.points
        .map((p) => ({ x: Number(p.x), y: Number(p.y) }))
        .filter((p) => Number.isFinite(p.x) && Number.isFinite(p.y) && p.y > 0),
    );
  }
  return out;
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count + 1) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12 * span; v += chosen) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function fmt(v: number): string {
  return Number(v.toPrecision(6)).toString();
}

export function renderSvg(series: Series[], opts: FigureOptions): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 440;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const pts = numeric(series);
  const all = [...pts.values()].flat();
  if (all.length === 0) {
    throw new Error('nothing to plot: no finite positive points');
  }
  const xLo = Math.min(...all.map((p) => p.x));
  const xHi = Math.max(...all.map((p) => p.x));
  const yLo = Math.log10(Math.min(...all.map((p) => p.y)));
  const yHi = Math.log10(Math.max(...all.map((p) => p.y)));
  const xPad = xHi > xLo ? 0.04 * (xHi - xLo) : 1;
  const yPad = yHi > yLo ? 0.06 * (yHi - yLo) : 0.5;
  const x0 = xLo - xPad;
  const x1 = xHi + xPad;
  const y0 = yLo - yPad;
  const y1 = yHi + yPad;

  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((Math.log10(y) - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="15" font-family="sans-serif">${opts.title}</text>`,
  );

  // frame
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`,
  );

  for (const t of niceTicks(x0, x1)) {
    const px = sx(t);
    parts.push(`<line x1="${px}" y1="${MARGIN.top + plotH}" x2="${px}" y2="${MARGIN.top + plotH + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-size="11" font-family="sans-serif">${fmt(t)}</text>`,
    );
  }
  for (let e = Math.ceil(y0); e <= Math.floor(y1); e += 1) {
    const py = sy(Math.pow(10, e));
    parts.push(`<line x1="${MARGIN.left - 5}" y1="${py}" x2="${MARGIN.left}" y2="${py}" stroke="#333"/>`);
    parts.push(`<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" stroke="#ddd"/>`);
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${py + 4}" text-anchor="end" font-size="11" font-family="sans-serif">1e${e}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" text-anchor="middle" font-size="12" font-family="sans-serif">${opts.xLabel}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${opts.yLabel}</text>`,
  );

  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const np = pts.get(s.key)!;
    if (np.length === 0) {
      return;
    }
    const path = np.map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`).join(' ');
    parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    for (const p of np) {
      parts.push(`<circle cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" r="3" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 14 + 16 * i;
    parts.push(`<line x1="${width - 170}" y1="${ly - 4}" x2="${width - 146}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(
      `<text x="${width - 140}" y="${ly}" font-size="12" font-family="sans-serif">${s.label}</text>`,
    );
    if (opts.annotateMinimum) {
      const best = np.reduce((a, b) => (b.y < a.y ? b : a));
      parts.push(
        `<circle cx="${sx(best.x).toFixed(2)}" cy="${sy(best.y).toFixed(2)}" r="6" fill="none" stroke="${color}" stroke-width="1.5"/>`,
      );
      parts.push(
        `<text x="${sx(best.x).toFixed(2)}" y="${(sy(best.y) - 10).toFixed(2)}" text-anchor="middle" font-size="11" font-family="sans-serif">min @ x=${fmt(best.x)}</text>`,
      );
    }
  });

  parts.push('</svg>');
  return parts.join('\n') + '\n';
}
