import { readFileSync } from 'fs';
import { describe, expect, it } from 'vitest';

import { column, parseCsv } from '../src/csv.js';

const fixture = (name: string) =>
  readFileSync(new URL(`./fixtures/${name}`, import.meta.url), 'utf8');

describe('parseCsv', () => {
  it('reads a golden decay-curve file', () => {
    const table = parseCsv(fixture('decay_curve.csv'));
    expect(table.columns).toEqual([
      't',
      'fidelity_amplitude',
      'fidelity_dephasing',
      'fidelity_match',
    ]);
    expect(table.rows.length).toBe(81);
    expect(table.provenance).toContain('scenario=decay');
    expect(table.rows[0][0]).toBe(0);
    expect(table.rows[0][3]).toBeCloseTo(1, 12);
  });

  it('keeps every cell numeric', () => {
    const table = parseCsv(fixture('fluctuation_surface.csv'));
    for (const row of table.rows) {
      for (const v of row) {
        expect(Number.isFinite(v)).toBe(true);
      }
    }
  });

  it('rejects a header-only file instead of emitting an empty figure', () => {
    const degenerate = '# scenario=decay seed=0\nt,fidelity_amplitude,fidelity_dephasing,fidelity_match\n';
    expect(() => parseCsv(degenerate)).toThrow(/no data rows/);
  });

  it('rejects an entirely empty file', () => {
    expect(() => parseCsv('')).toThrow(/empty file/);
  });

  it('rejects ragged rows', () => {
    expect(() => parseCsv('# p\na,b\n1,2,3\n')).toThrow(/2 columns/);
  });

  it('rejects non-numeric cells naming the column', () => {
    expect(() => parseCsv('# p\nt,f\n0.1,oops\n')).toThrow(/column "f"/);
  });
});

describe('column', () => {
  it('extracts by name', () => {
    const table = parseCsv(fixture('decay_curve.csv'));
    const t = column(table, 't');
    expect(t.length).toBe(81);
    expect(t[t.length - 1]).toBeCloseTo(0.008, 12);
  });

  it('names the missing column in its error', () => {
    const table = parseCsv(fixture('decay_curve.csv'));
    expect(() => column(table, 'f_closed')).toThrow(/missing required column "f_closed"/);
  });
});
