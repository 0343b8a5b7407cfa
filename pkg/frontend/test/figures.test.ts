import { readFileSync } from 'fs';
import { describe, expect, it } from 'vitest';

import { parseCsv } from '../src/csv.js';
import { FIGURE_KINDS, isFigureKind, renderFigure } from '../src/figures.js';

const fixture = (name: string) =>
  readFileSync(new URL(`./fixtures/${name}`, import.meta.url), 'utf8');

describe('renderFigure', () => {
  it.each([
    ['decay_curve.csv', 'decay_curve'],
    ['decay_surface.csv', 'decay_surface'],
    ['fluctuation_surface.csv', 'fluctuation_surface'],
  ] as const)('renders %s as %s', (file, kind) => {
    const svg = renderFigure(parseCsv(fixture(file)), kind);
    expect(svg.startsWith('<svg')).toBe(true);
    expect(svg).toContain('</svg>');
    expect(svg.length).toBeGreaterThan(2000);
  });

  it('titles and labels the decay curve', () => {
    const svg = renderFigure(parseCsv(fixture('decay_curve.csv')), 'decay_curve');
    expect(svg).toContain('Teleported-state fidelity under atomic decay');
    expect(svg).toContain('time (s)');
    expect(svg).toContain('reference-matching model');
  });

  it('is deterministic for a fixed input', () => {
    const table = parseCsv(fixture('fluctuation_surface.csv'));
    expect(renderFigure(table, 'fluctuation_surface')).toBe(
      renderFigure(table, 'fluctuation_surface'),
    );
  });

  it('does not mutate the parsed table', () => {
    const table = parseCsv(fixture('decay_surface.csv'));
    const snapshot = JSON.stringify(table);
    renderFigure(table, 'decay_surface');
    expect(JSON.stringify(table)).toBe(snapshot);
  });

  it('rejects a curve CSV missing a model column, naming it', () => {
    const table = parseCsv('# p\nt,fidelity_amplitude\n0,1\n');
    expect(() => renderFigure(table, 'decay_curve')).toThrow(
      /missing required column "fidelity_dephasing"/,
    );
  });

  it('rejects a surface CSV without its grid columns', () => {
    const table = parseCsv(fixture('decay_curve.csv'));
    expect(() => renderFigure(table, 'fluctuation_surface')).toThrow(
      /missing required column "c0"/,
    );
  });

  it('validates the numeric twin column even though only the closed form is drawn', () => {
    const table = parseCsv('# p\nc0,x,f_closed\n0.5,0.01,0.99\n');
    expect(() => renderFigure(table, 'fluctuation_surface')).toThrow(
      /missing required column "f_numeric"/,
    );
  });
});

describe('isFigureKind', () => {
  it('accepts exactly the known kinds', () => {
    for (const kind of FIGURE_KINDS) {
      expect(isFigureKind(kind)).toBe(true);
    }
    expect(isFigureKind('pie')).toBe(false);
  });
});
