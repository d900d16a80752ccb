/**
 * Figure extraction: turns an experiment table into plottable series.
 *
 * Two kinds are understood:
 *  - "rate-vs-n": Monte Carlo rates (markers with +-2 SE bars) and the
 *    deterministic approximations (lines) versus antenna count, one group
 *    per DoF rule; matched filter solid, regularized detector dashed.
 *  - "dof-contour": required DoF per user versus effective SNR in dB, one
 *    curve pair per target fraction; infeasible points are gaps.
 */

import { Table, columnIndex, numberAt, SchemaError } from "./csv";

export type FigureKind = "rate-vs-n" | "dof-contour";

export interface FigureSpec {
  csvPath: string;
  kind: FigureKind;
  outPath: string;
  logDof?: boolean;
  width?: number;
  height?: number;
}

export interface Point {
  x: number;
  y: number | null; // null renders as a gap
  bar?: number;     // half-height of the error bar (already 2 * SE)
}

export interface Series {
  label: string;
  points: Point[];
  color: string;
  dash: string;     // "" = solid
  markers: boolean;
}

export interface FigureData {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logY: boolean;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                 "#8c564b", "#17becf", "#7f7f7f"];

const MMSE_DASH = "7 4";

function sortedUnique(values: string[]): string[] {
  return [...new Set(values)].sort();
}

export function rateVsNData(table: Table): FigureData {
  const n = columnIndex(table, "n");
  const rule = columnIndex(table, "p_rule");
  const cols = {
    mcMf: columnIndex(table, "mc_rate_mf"),
    seMf: columnIndex(table, "se_mf"),
    deMf: columnIndex(table, "de_rate_mf"),
    mcMm: columnIndex(table, "mc_rate_mmse"),
    seMm: columnIndex(table, "se_mmse"),
    deMm: columnIndex(table, "de_rate_mmse"),
  };
  const rules = sortedUnique(table.rows.map((r) => r[rule]));
  const series: Series[] = [];
  rules.forEach((ruleName, i) => {
    const rows = table.rows
      .filter((r) => r[rule] === ruleName)
      .sort((a, b) => Number(a[n]) - Number(b[n]));
    const color = PALETTE[i % PALETTE.length];
    const grab = (col: number, bar?: number): Point[] =>
      rows.map((r) => ({
        x: Number(r[n]),
        y: numberAt(r, col),
        bar: bar === undefined ? undefined : 2 * (numberAt(r, bar) ?? 0),
      }));
    series.push(
      { label: `MF approx, P=${ruleName}`, points: grab(cols.deMf),
        color, dash: "", markers: false },
      { label: `MMSE approx, P=${ruleName}`, points: grab(cols.deMm),
        color, dash: MMSE_DASH, markers: false },
      { label: `MF sim, P=${ruleName}`, points: grab(cols.mcMf, cols.seMf),
        color, dash: "", markers: true },
      { label: `MMSE sim, P=${ruleName}`, points: grab(cols.mcMm, cols.seMm),
        color, dash: "", markers: true },
    );
  });
  return {
    title: "Ergodic achievable rate versus number of antennas",
    xLabel: "antennas N",
    yLabel: "rate (bit/s/Hz)",
    series,
    logY: false,
  };
}

export function dofContourData(table: Table, logDof: boolean): FigureData {
  const db = columnIndex(table, "rho_n_db");
  const eta = columnIndex(table, "eta");
  const dofMf = columnIndex(table, "dof_mf");
  const dofMm = columnIndex(table, "dof_mmse");
  columnIndex(table, "status_mf"); // required by the schema even if unused
  const etas = sortedUnique(table.rows.map((r) => r[eta]));
  const series: Series[] = [];
  etas.forEach((etaValue, i) => {
    const rows = table.rows
      .filter((r) => r[eta] === etaValue)
      .sort((a, b) => Number(a[db]) - Number(b[db]));
    const color = PALETTE[i % PALETTE.length];
    const grab = (col: number): Point[] =>
      rows.map((r) => {
        const y = numberAt(r, col);
        return { x: Number(r[db]), y: y !== null && Number.isFinite(y) ? y : null };
      });
    series.push(
      { label: `MF, eta=${etaValue}`, points: grab(dofMf),
        color, dash: "", markers: false },
      { label: `MMSE, eta=${etaValue}`, points: grab(dofMm),
        color, dash: MMSE_DASH, markers: false },
    );
  });
  return {
    title: "DoF per user needed for a fraction of the limit rate",
    xLabel: "effective SNR rho*N (dB)",
    yLabel: "DoF per user P/K",
    series,
    logY: logDof,
  };
}

export function figureData(table: Table, spec: FigureSpec): FigureData {
  if (spec.kind === "rate-vs-n") {
    return rateVsNData(table);
  }
  if (spec.kind === "dof-contour") {
    return dofContourData(table, spec.logDof ?? false);
  }
  throw new SchemaError(`unknown figure kind "${spec.kind}"`);
}
