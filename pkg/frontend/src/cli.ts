#!/usr/bin/env node
// figures <figure-id> <csv...> -o <path>   (omit -o to write SVG to stdout)

import { writeFileSync } from 'node:fs';
import { readTable } from './csv.js';
import { buildFigure, serializeSeries } from './figures.js';
import { renderSvg } from './svg.js';

function usage(): never {
  console.error('usage: figures <figure-id 1-4> <csv...> -o <path> [--series]');
  process.exit(2);
}

function main(argv: string[]): number {
  const inputs: string[] = [];
  let output = '';
  let seriesOnly = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === '-o' || arg === '--output') {
      output = argv[++i] ?? usage();
    } else if (arg === '--series') {
      seriesOnly = true;
    } else if (arg.startsWith('-')) {
      usage();
    } else {
      inputs.push(arg);
    }
  }
  if (inputs.length < 2) usage();
  const id = Number(inputs[0]);
  if (!Number.isInteger(id)) usage();

  try {
    const fig = buildFigure(id, inputs.slice(1).map(readTable));
    const text = seriesOnly ? serializeSeries(fig) : renderSvg(fig);
    if (output) {
      writeFileSync(output, text);
    } else {
      process.stdout.write(text);
    }
    return 0;
  } catch (err) {
    console.error(`figures: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
