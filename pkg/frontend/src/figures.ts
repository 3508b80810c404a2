// The four study figures, built from the simulator's CSV output alone.
//
//   1  Bloch components x,y,z of the enlarged (exact) reference
//   2  coherent ensembles minus reference, orders 0/1/2 (dotted/dashed/solid)
//   3  quadrature ensembles minus reference, orders 0/1 (dotted/dashed)
//   4  post-Markovian ensembles minus reference, coherent (dotted) vs
//      quadrature (solid)
//
// Difference figures plot the L1 Bloch difference |dx|+|dy|+|dz| per input.

import { SeriesTable, column, sharedGrid } from './csv.js';

export type LineStyle = 'dotted' | 'dashed' | 'solid';

export interface Series {
  label: string;
  style: LineStyle;
  color: string;
  x: number[];
  y: number[];
}

export interface Figure {
  id: number;
  series: Series[];
  xLabel: string;
  yLabel: string;
  caption: string;
}

export const INPUT_COUNTS: Record<number, number> = { 1: 1, 2: 3, 3: 2, 4: 2 };

const TIME_NOTE = 'Time in units of 1/γ.';

function l1Diff(table: SeriesTable): number[] {
  const dx = column(table, 'dx');
  const dy = column(table, 'dy');
  const dz = column(table, 'dz');
  return dx.map((v, i) => Math.abs(v) + Math.abs(dy[i]) + Math.abs(dz[i]));
}

function diffFigure(id: number, tables: SeriesTable[],
                    labels: string[], styles: LineStyle[],
                    caption: string): Figure {
  const t = sharedGrid(tables);
  const series = tables.map((table, i) => ({
    label: labels[i],
    style: styles[i],
    color: '#000000',
    x: t,
    y: l1Diff(table),
  }));
  return { id, series, xLabel: 't (1/γ)', yLabel: 'L1 Bloch difference', caption };
}

export function buildFigure(id: number, tables: SeriesTable[]): Figure {
  const want = INPUT_COUNTS[id];
  if (want === undefined) throw new Error(`unknown figure id ${id} (use 1-4)`);
  if (tables.length !== want) {
    throw new Error(`figure ${id} needs ${want} csv input(s), got ${tables.length}`);
  }

  if (id === 1) {
    const t = sharedGrid(tables);
    const colors: Record<string, string> = { x: '#1f77b4', y: '#2ca02c', z: '#d62728' };
    const series = ['x', 'y', 'z'].map(name => ({
      label: name,
      style: 'solid' as LineStyle,
      color: colors[name],
      x: t,
      y: column(tables[0], name),
    }));
    return {
      id, series,
      xLabel: 't (1/γ)', yLabel: 'Bloch components',
      caption: 'Bloch vector components of the reduced state from the '
        + 'enlarged-system reference: x (blue), y (green), z (red). ' + TIME_NOTE,
    };
  }
  if (id === 2) {
    return diffFigure(id, tables,
      ['order 0 (dotted)', 'order 1 (dashed)', 'order 2 (solid)'],
      ['dotted', 'dashed', 'solid'],
      'Coherent-unravelling ensemble minus the enlarged reference, per '
      + 'perturbation order: order 0 (dotted), order 1 (dashed), order 2 '
      + '(solid). ' + TIME_NOTE);
  }
  if (id === 3) {
    return diffFigure(id, tables,
      ['order 0 (dotted)', 'order 1 (dashed)'],
      ['dotted', 'dashed'],
      'Quadrature-unravelling ensemble minus the enlarged reference: '
      + 'order 0 (dotted), order 1 (dashed). ' + TIME_NOTE);
  }
  return diffFigure(id, tables,
    ['coherent (dotted)', 'quadrature (solid)'],
    ['dotted', 'solid'],
    'First-order post-Markovian ensemble minus the enlarged reference for '
    + 'the coherent (dotted) and quadrature (solid) unravellings. ' + TIME_NOTE);
}

// Canonical JSON of what ends up plotted; goldens byte-compare against this.
export function serializeSeries(fig: Figure): string {
  const series = fig.series.map(s => ({
    label: s.label, style: s.style, x: s.x, y: s.y,
  }));
  return JSON.stringify({ figure: fig.id, series }, null, 1) + '\n';
}
