/**
 * Batch renderer: `node dist/main.js --in run.csv --kind decay_curve --out fig.svg`
 */

import { readFileSync, writeFileSync } from 'fs';

import { parseCsv } from './csv.js';
import { FIGURE_KINDS, isFigureKind, renderFigure } from './figures.js';

interface Args {
  input: string;
  kind: string;
  out: string;
}

export function parseArgs(argv: string[]): Args {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith('--') || value === undefined) {
      throw new Error(`expected --flag value pairs, got "${argv.slice(i).join(' ')}"`);
    }
    values[flag.slice(2)] = value;
  }
  for (const required of ['in', 'kind', 'out']) {
    if (!(required in values)) {
      throw new Error(`missing required flag --${required}`);
    }
  }
  if (!isFigureKind(values.kind)) {
    throw new Error(`unknown kind "${values.kind}"; expected one of ${FIGURE_KINDS.join(', ')}`);
  }
  return { input: values.in, kind: values.kind, out: values.out };
}

export function run(argv: string[]): void {
  const args = parseArgs(argv);
  const table = parseCsv(readFileSync(args.input, 'utf8'));
  const svg = renderFigure(table, args.kind as (typeof FIGURE_KINDS)[number]);
  writeFileSync(args.out, svg);
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('main.js') || entry.endsWith('main.ts')) {
  try {
    run(process.argv.slice(2));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
}
