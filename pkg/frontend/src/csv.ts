// Reader for the simulator's CSV contract: comma-separated, one header row,
// plain decimal floats, LF endings.  Bloch files carry t,x,y,z,sx,sy,sz and
// difference files t,dx,dy,dz; we only assume "t plus named columns".

import { readFileSync } from 'node:fs';

export interface SeriesTable {
  path: string;
  header: string[];
  rows: number[][];
}

export function readTable(path: string): SeriesTable {
  const text = readFileSync(path, 'utf8');
  const lines = text.split(/\r?\n/).filter(l => l.length > 0);
  if (lines.length < 2) throw new Error(`${path}: no data rows`);
  const header = lines[0].split(',');
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',');
    if (parts.length !== header.length) {
      throw new Error(`${path}:${i + 1}: expected ${header.length} fields, got ${parts.length}`);
    }
    const row = parts.map(Number);
    if (row.some(v => Number.isNaN(v))) {
      throw new Error(`${path}:${i + 1}: non-numeric field`);
    }
    rows.push(row);
  }
  return { path, header, rows };
}

export function column(table: SeriesTable, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new Error(`${table.path}: missing column '${name}'`);
  return table.rows.map(r => r[idx]);
}

const GRID_TOL = 1e-9;

// All inputs of one figure must share the time grid; refuse to resample.
export function sharedGrid(tables: SeriesTable[]): number[] {
  const t = column(tables[0], 't');
  for (const other of tables.slice(1)) {
    const u = column(other, 't');
    if (u.length !== t.length || u.some((v, i) => Math.abs(v - t[i]) > GRID_TOL)) {
      throw new Error(`time grid of ${other.path} differs from ${tables[0].path}`);
    }
  }
  return t;
}
