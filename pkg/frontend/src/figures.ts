/**
 * Figure builders: one echarts option per figure kind, rendered to an
 * SVG string server-side.  All numbers come straight from the CSV.
 *
 *   decay_curve          fidelity vs time, one line per decay model
 *   decay_surface        fidelity over (time, input coefficient)
 *   fluctuation_surface  closed-form fidelity over (coefficient, spread)
 */

import * as echarts from 'echarts';
import type { EChartsOption } from 'echarts';

import { CsvTable, column } from './csv.js';

export const FIGURE_KINDS = ['decay_curve', 'decay_surface', 'fluctuation_surface'] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

const WIDTH = 800;
const HEIGHT = 560;

const CURVE_SERIES: Array<{ column: string; label: string }> = [
  { column: 'fidelity_amplitude', label: 'amplitude decay' },
  { column: 'fidelity_dephasing', label: 'coherence-only decay' },
  { column: 'fidelity_match', label: 'reference-matching model' },
];

function decayCurveOption(table: CsvTable): EChartsOption {
  const t = column(table, 't');
  const series = CURVE_SERIES.map(({ column: name, label }) => ({
    type: 'line' as const,
    name: label,
    showSymbol: false,
    data: column(table, name).map((f, i) => [t[i], f]),
  }));
  return {
    animation: false,
    title: { text: 'Teleported-state fidelity under atomic decay' },
    legend: { top: 28 },
    xAxis: { type: 'value', name: 'time (s)', nameLocation: 'middle', nameGap: 28 },
    yAxis: { type: 'value', name: 'fidelity', min: 0, max: 1 },
    series,
  };
}

/** Heatmap helper: category axes built from the distinct grid values. */
function heatmap(
  xs: number[],
  ys: number[],
  values: number[],
  labels: { title: string; x: string; y: string },
): EChartsOption {
  const xCats = [...new Set(xs)].sort((a, b) => a - b);
  const yCats = [...new Set(ys)].sort((a, b) => a - b);
  const data = values.map((v, i) => [xCats.indexOf(xs[i]), yCats.indexOf(ys[i]), v]);
  // an all-unity surface (e.g. the x = 0 row alone) still needs a
  // nonempty color range
  const lo = Math.min(...values);
  return {
    animation: false,
    title: { text: labels.title },
    grid: { right: 90 },
    xAxis: {
      type: 'category',
      data: xCats.map((v) => v.toPrecision(4)),
      name: labels.x,
      nameLocation: 'middle',
      nameGap: 28,
    },
    yAxis: {
      type: 'category',
      data: yCats.map((v) => v.toPrecision(4)),
      name: labels.y,
    },
    visualMap: {
      min: Math.min(lo, 0.999999),
      max: 1,
      orient: 'vertical',
      right: 10,
      top: 'center',
      calculable: false,
    },
    series: [{ type: 'heatmap', data }],
  };
}

function decaySurfaceOption(table: CsvTable): EChartsOption {
  return heatmap(column(table, 't'), column(table, 'c0'), column(table, 'fidelity_match'), {
    title: 'Fidelity under decay vs time and input coefficient',
    x: 'time (s)',
    y: 'c0',
  });
}

function fluctuationSurfaceOption(table: CsvTable): EChartsOption {
  const c0 = column(table, 'c0');
  const x = column(table, 'x');
  const closed = column(table, 'f_closed');
  // schema check covers the numeric twin columns even though the closed
  // form is the surface that gets drawn
  column(table, 'f_numeric');
  column(table, 'delta');
  return heatmap(c0, x, closed, {
    title: 'Fidelity under interaction-time fluctuation',
    x: 'c0',
    y: 'relative spread x',
  });
}

const BUILDERS: Record<FigureKind, (table: CsvTable) => EChartsOption> = {
  decay_curve: decayCurveOption,
  decay_surface: decaySurfaceOption,
  fluctuation_surface: fluctuationSurfaceOption,
};

export function isFigureKind(kind: string): kind is FigureKind {
  return (FIGURE_KINDS as readonly string[]).includes(kind);
}

/**
 * The renderer numbers internal SVG ids (class and clip-path names) with
 * a process-global counter, which would make byte-level output depend on
 * how many charts were rendered before.  Renumbering them by order of
 * first appearance keeps the file self-consistent and deterministic.
 */
function normalizeIds(svg: string): string {
  const seen = new Map<string, string>();
  const counters = new Map<string, number>();
  return svg.replace(/zr\d+-([A-Za-z]+-?)\d+/g, (token, kind: string) => {
    let mapped = seen.get(token);
    if (mapped === undefined) {
      const n = counters.get(kind) ?? 0;
      counters.set(kind, n + 1);
      mapped = `zr-${kind}${n}`;
      seen.set(token, mapped);
    }
    return mapped;
  });
}

/** Render a parsed CSV as an SVG string; throws on schema mismatch. */
export function renderFigure(table: CsvTable, kind: FigureKind): string {
  const option = BUILDERS[kind](table);
  const chart = echarts.init(null, null, {
    renderer: 'svg',
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  try {
    chart.setOption(option);
    return normalizeIds(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}
