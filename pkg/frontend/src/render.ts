/**
 * Deterministic SVG rendering of time-series panels.
 *
 * No DOM, no fonts, no randomness: the same inputs always produce the same
 * bytes, so figures can be diffed in version control. Standard-error bands
 * are drawn behind their series whenever the matching stderr_ column exists.
 */

import { scaleLinear } from "d3-scale";
import { area, line } from "d3-shape";

import { stderrColumn } from "./contract.js";
import { ArtifactError, TimeSeriesTable } from "./csv.js";

export interface SeriesSpec {
  /** key of the input table this series reads from */
  input: string;
  column: string;
  label: string;
}

export interface PanelSpec {
  title: string;
  series: SeriesSpec[];
  xLabel: string;
  yLabel: string;
  /** fixed y-range keeps population panels comparable; default [0, 1] */
  yRange?: [number, number];
}

export interface PlotSpec {
  panels: PanelSpec[];
  width?: number;
  panelHeight?: number;
}

// Okabe-Ito palette: color-blind safe and stable across renders
const PALETTE = [
  "#0072b2", "#d55e00", "#009e73", "#cc79a7",
  "#e69f00", "#56b4e9", "#f0e442", "#000000",
];

const MARGIN = { top: 34, right: 16, bottom: 42, left: 54 };

function fmt(x: number): string {
  if (!Number.isFinite(x)) throw new ArtifactError(`non-finite coordinate ${x}`);
  return x.toFixed(2).replace(/\.00$/, "").replace(/(\.\d)0$/, "$1");
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderFigure(spec: PlotSpec, tables: Map<string, TimeSeriesTable>): string {
  if (spec.panels.length === 0) throw new ArtifactError("plot spec has no panels");
  const width = spec.width ?? 720;
  const panelHeight = spec.panelHeight ?? 300;
  const height = panelHeight * spec.panels.length;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="#ffffff"/>`);
  spec.panels.forEach((panel, i) => {
    parts.push(renderPanel(panel, tables, width, panelHeight, i * panelHeight));
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function resolveTable(tables: Map<string, TimeSeriesTable>, key: string): TimeSeriesTable {
  const t = tables.get(key);
  if (!t) throw new ArtifactError(`panel references unknown input '${key}'`);
  return t;
}

function renderPanel(panel: PanelSpec, tables: Map<string, TimeSeriesTable>,
                     width: number, height: number, yOff: number): string {
  if (panel.series.length === 0) throw new ArtifactError(`panel '${panel.title}' has no series`);
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  let tMin = Infinity;
  let tMax = -Infinity;
  for (const s of panel.series) {
    const tab = resolveTable(tables, s.input);
    if (!tab.columns.includes(s.column)) {
      throw new ArtifactError(`input '${s.input}' has no column '${s.column}'`);
    }
    const t = tab.data.get("t")!;
    tMin = Math.min(tMin, t[0]);
    tMax = Math.max(tMax, t[tab.length - 1]);
  }
  const [yMin, yMax] = panel.yRange ?? [0, 1];
  const x = scaleLinear().domain([tMin, tMax]).range([0, innerW]);
  const y = scaleLinear().domain([yMin, yMax]).range([innerH, 0]);

  const parts: string[] = [];
  parts.push(`<g transform="translate(${MARGIN.left},${yOff + MARGIN.top})">`);
  parts.push(`<text x="${innerW / 2}" y="-14" text-anchor="middle" font-size="13" font-weight="bold">${esc(panel.title)}</text>`);

  for (const tick of x.ticks(6)) {
    const px = fmt(x(tick));
    parts.push(`<line x1="${px}" x2="${px}" y1="0" y2="${innerH}" stroke="#dddddd" stroke-width="0.6"/>`);
    parts.push(`<text x="${px}" y="${innerH + 18}" text-anchor="middle" font-size="10">${tick}</text>`);
  }
  for (const tick of y.ticks(5)) {
    const py = fmt(y(tick));
    parts.push(`<line x1="0" x2="${innerW}" y1="${py}" y2="${py}" stroke="#dddddd" stroke-width="0.6"/>`);
    parts.push(`<text x="-8" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="10">${tick}</text>`);
  }
  parts.push(`<rect width="${innerW}" height="${innerH}" fill="none" stroke="#333333" stroke-width="1"/>`);
  parts.push(`<text x="${innerW / 2}" y="${innerH + 34}" text-anchor="middle" font-size="11">${esc(panel.xLabel)}</text>`);
  parts.push(`<text transform="translate(${-40},${innerH / 2}) rotate(-90)" text-anchor="middle" font-size="11">${esc(panel.yLabel)}</text>`);

  const mkLine = line<number>()
    .x((_, i) => Number(fmt(x(currentT[i]))))
    .y((v) => Number(fmt(y(v))));
  const mkArea = area<number>()
    .x((_, i) => Number(fmt(x(currentT[i]))))
    .y0((_, i) => Number(fmt(y(currentLo[i]))))
    .y1((_, i) => Number(fmt(y(currentHi[i]))));

  let currentT: Float64Array = new Float64Array(0);
  let currentLo: Float64Array = new Float64Array(0);
  let currentHi: Float64Array = new Float64Array(0);

  panel.series.forEach((s, idx) => {
    const tab = resolveTable(tables, s.input);
    const color = PALETTE[idx % PALETTE.length];
    currentT = tab.data.get("t")!;
    const vals = tab.data.get(s.column)!;
    const seCol = stderrColumn(s.column, tab.columns);
    if (seCol) {
      const se = tab.data.get(seCol)!;
      currentLo = vals.map((v, i) => v - se[i]);
      currentHi = vals.map((v, i) => v + se[i]);
      const bandPath = mkArea(Array.from(vals));
      parts.push(`<path class="band" d="${bandPath}" fill="${color}" opacity="0.18" stroke="none"/>`);
    }
    const d = mkLine(Array.from(vals));
    parts.push(`<path class="series" d="${d}" fill="none" stroke="${color}" stroke-width="1.4"/>`);
  });

  // legend in the right margin of the panel body
  panel.series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const ly = 12 + 16 * idx;
    parts.push(`<g class="legend"><line x1="${innerW - 108}" x2="${innerW - 88}" y1="${ly}" y2="${ly}" stroke="${color}" stroke-width="1.6"/>` +
      `<text x="${innerW - 82}" y="${ly + 3.5}" font-size="10">${esc(s.label)}</text></g>`);
  });

  parts.push("</g>");
  return parts.join("\n");
}
