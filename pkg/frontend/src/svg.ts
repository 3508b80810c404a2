// Minimal deterministic SVG line plots: no timestamps, no randomness, fixed
// coordinate precision, so identical inputs give byte-identical files.

import { Figure, LineStyle } from './figures.js';

const W = 640;
const PLOT_H = 300;
const MARGIN = { left: 64, right: 16, top: 18 };
const X_AXIS_H = 46;
const LINE_H = 15;

const DASH: Record<LineStyle, string> = {
  dotted: '1.5 3.5',
  dashed: '8 5',
  solid: '',
};

function extent(values: number[]): [number, number] {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const out: number[] = [];
  for (let k = Math.ceil(lo / step - 1e-9); k * step <= hi + step * 1e-9; k++) {
    out.push(Number((k * step).toFixed(12)));
  }
  return out;
}

const px = (v: number) => v.toFixed(2);

function wrap(text: string, width: number): string[] {
  const lines: string[] = [];
  let line = '';
  for (const word of text.split(' ')) {
    if (line.length > 0 && line.length + 1 + word.length > width) {
      lines.push(line);
      line = word;
    } else {
      line = line.length > 0 ? `${line} ${word}` : word;
    }
  }
  if (line.length > 0) lines.push(line);
  return lines;
}

export function renderSvg(fig: Figure): string {
  const [x0, x1] = extent(fig.series.flatMap(s => s.x));
  let [y0, y1] = extent(fig.series.flatMap(s => s.y));
  const pad = (y1 - y0 || 1) * 0.05;
  y0 -= pad;
  y1 += pad;

  const plotW = W - MARGIN.left - MARGIN.right;
  const sx = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0 || 1)) * plotW;
  const sy = (v: number) => MARGIN.top + (1 - (v - y0) / (y1 - y0)) * PLOT_H;

  const caption = wrap(`Fig. ${fig.id}. ${fig.caption}`, 96);
  const height = MARGIN.top + PLOT_H + X_AXIS_H + caption.length * LINE_H + 10;
  const out: string[] = [];
  out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${height}" `
    + `viewBox="0 0 ${W} ${height}" font-family="Helvetica, Arial, sans-serif" font-size="12">`);
  out.push(`<rect width="${W}" height="${height}" fill="#ffffff"/>`);

  // frame and ticks
  const bottom = MARGIN.top + PLOT_H;
  out.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" `
    + `height="${PLOT_H}" fill="none" stroke="#333333"/>`);
  for (const v of ticks(x0, x1)) {
    const x = px(sx(v));
    out.push(`<line x1="${x}" y1="${bottom}" x2="${x}" y2="${bottom + 5}" stroke="#333333"/>`);
    out.push(`<text x="${x}" y="${bottom + 18}" text-anchor="middle">${v}</text>`);
  }
  for (const v of ticks(y0, y1)) {
    const y = px(sy(v));
    out.push(`<line x1="${MARGIN.left - 5}" y1="${y}" x2="${MARGIN.left}" y2="${y}" stroke="#333333"/>`);
    out.push(`<text x="${MARGIN.left - 8}" y="${y}" dy="4" text-anchor="end">${v}</text>`);
  }
  if (y0 < 0 && y1 > 0) {
    const y = px(sy(0));
    out.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" `
      + `y2="${y}" stroke="#cccccc"/>`);
  }

  for (const s of fig.series) {
    const d = s.x.map((v, i) => `${i === 0 ? 'M' : 'L'}${px(sx(v))} ${px(sy(s.y[i]))}`).join('');
    const dash = DASH[s.style] ? ` stroke-dasharray="${DASH[s.style]}"` : '';
    out.push(`<path d="${d}" fill="none" stroke="${s.color}" stroke-width="1.3"${dash}/>`);
  }

  const xMid = MARGIN.left + plotW / 2;
  out.push(`<text x="${xMid}" y="${bottom + 36}" text-anchor="middle">${fig.xLabel}</text>`);
  const yMid = MARGIN.top + PLOT_H / 2;
  out.push(`<text x="16" y="${yMid}" text-anchor="middle" `
    + `transform="rotate(-90 16 ${yMid})">${fig.yLabel}</text>`);

  let cy = bottom + X_AXIS_H + LINE_H;
  for (const line of caption) {
    out.push(`<text x="${MARGIN.left}" y="${cy}" font-size="11" fill="#222222">${line}</text>`);
    cy += LINE_H;
  }
  out.push('</svg>');
  return out.join('\n') + '\n';
}
