/**
 * Dependency-free SVG line-plot writer. Output is a pure function of the
 * figure data and canvas size: no timestamps, no randomness, fixed float
 * formatting, so the same input always yields the same bytes.
 */

import { FigureData, Series, Point } from "./figure";

const MARGIN = { top: 42, right: 18, bottom: 46, left: 64 };
const LEGEND_LINE = 16;

function fmt(v: number): string {
  return Number(v.toFixed(3)).toString();
}

function finiteYs(series: Series[]): number[] {
  const ys: number[] = [];
  for (const s of series) {
    for (const p of s.points) {
      if (p.y !== null && Number.isFinite(p.y)) {
        ys.push(p.y - (p.bar ?? 0), p.y + (p.bar ?? 0));
      }
    }
  }
  return ys;
}

export interface Scale {
  (value: number): number;
  ticks: number[];
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => c >= rawStep) ?? 10 * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-9 * step; v += step) {
    ticks.push(Number(v.toFixed(10)));
  }
  return ticks;
}

export function linearScale(lo: number, hi: number, outLo: number,
                            outHi: number): Scale {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const scale = ((value: number) =>
    outLo + ((value - lo) / (hi - lo)) * (outHi - outLo)) as Scale;
  scale.ticks = niceTicks(lo, hi);
  return scale;
}

export function logScale(lo: number, hi: number, outLo: number,
                         outHi: number): Scale {
  const safeLo = Math.max(lo, 1e-12);
  const safeHi = Math.max(hi, safeLo * 10);
  const la = Math.log10(safeLo);
  const lb = Math.log10(safeHi);
  const scale = ((value: number) =>
    outLo + ((Math.log10(Math.max(value, 1e-12)) - la) / (lb - la)) *
      (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.floor(la); e <= Math.ceil(lb); e++) {
    ticks.push(Math.pow(10, e));
  }
  scale.ticks = ticks;
  return scale;
}

function escape(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function polylines(points: Point[], sx: Scale, sy: Scale): string[] {
  // split at gaps so infeasible stretches stay empty
  const runs: string[][] = [[]];
  for (const p of points) {
    if (p.y === null || !Number.isFinite(p.y)) {
      if (runs[runs.length - 1].length > 0) {
        runs.push([]);
      }
      continue;
    }
    runs[runs.length - 1].push(`${fmt(sx(p.x))},${fmt(sy(p.y))}`);
  }
  return runs.filter((r) => r.length > 1).map((r) => r.join(" "));
}

export function renderSvg(data: FigureData, width = 760, height = 520): string {
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const xs = data.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = finiteYs(data.series);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = data.logY ? Math.min(...ys.filter((v) => v > 0)) : Math.min(0, ...ys);
  const yHi = Math.max(...ys);
  const sx = linearScale(xLo, xHi, MARGIN.left, MARGIN.left + plotW);
  const sy = (data.logY ? logScale : linearScale)(
    yLo, yHi * 1.04, MARGIN.top + plotH, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="22" font-size="15" text-anchor="middle">` +
             `${escape(data.title)}</text>`);

  // axes, grid, ticks
  const axisY = MARGIN.top + plotH;
  for (const t of sx.ticks) {
    if (t < xLo - 1e-9 || t > xHi + 1e-9) continue;
    const x = fmt(sx(t));
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${axisY}" ` +
               `stroke="#dddddd" stroke-width="1"/>`);
    parts.push(`<text x="${x}" y="${axisY + 18}" font-size="11" ` +
               `text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of sy.ticks) {
    const y = fmt(sy(t));
    if (sy(t) < MARGIN.top - 1e-9 || sy(t) > axisY + 1e-9) continue;
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" ` +
               `y2="${y}" stroke="#dddddd" stroke-width="1"/>`);
    parts.push(`<text x="${MARGIN.left - 6}" y="${y}" font-size="11" ` +
               `text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
             `height="${plotH}" fill="none" stroke="black" stroke-width="1"/>`);
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" ` +
             `font-size="13" text-anchor="middle">${escape(data.xLabel)}</text>`);
  parts.push(`<text x="16" y="${MARGIN.top + plotH / 2}" font-size="13" ` +
             `text-anchor="middle" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">` +
             `${escape(data.yLabel)}</text>`);

  // series
  for (const s of data.series) {
    if (!s.markers) {
      for (const pts of polylines(s.points, sx, sy)) {
        const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
        parts.push(`<polyline points="${pts}" fill="none" stroke="${s.color}" ` +
                   `stroke-width="1.8"${dash}/>`);
      }
      continue;
    }
    for (const p of s.points) {
      if (p.y === null || !Number.isFinite(p.y)) continue;
      const cx = fmt(sx(p.x));
      const cy = fmt(sy(p.y));
      if (p.bar !== undefined && p.bar > 0) {
        const yTop = fmt(sy(p.y + p.bar));
        const yBot = fmt(sy(p.y - p.bar));
        parts.push(`<line class="errorbar" x1="${cx}" y1="${yTop}" x2="${cx}" ` +
                   `y2="${yBot}" stroke="${s.color}" stroke-width="1"/>`);
        for (const yy of [yTop, yBot]) {
          parts.push(`<line x1="${fmt(sx(p.x) - 3)}" y1="${yy}" ` +
                     `x2="${fmt(sx(p.x) + 3)}" y2="${yy}" stroke="${s.color}" ` +
                     `stroke-width="1"/>`);
        }
      }
      parts.push(`<circle cx="${cx}" cy="${cy}" r="2.6" fill="${s.color}"/>`);
    }
  }

  // legend (line samples show the dash style)
  let ly = MARGIN.top + 8;
  const lx = MARGIN.left + plotW - 188;
  for (const s of data.series) {
    if (s.markers) {
      parts.push(`<circle cx="${lx + 12}" cy="${ly - 3}" r="2.6" fill="${s.color}"/>`);
    } else {
      const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
      parts.push(`<line x1="${lx}" y1="${ly - 3}" x2="${lx + 24}" y2="${ly - 3}" ` +
                 `stroke="${s.color}" stroke-width="1.8"${dash}/>`);
    }
    parts.push(`<text x="${lx + 30}" y="${ly}" font-size="10.5">` +
               `${escape(s.label)}</text>`);
    ly += LEGEND_LINE;
  }

  parts.push("</svg>");
  return parts.join("\n");
}
