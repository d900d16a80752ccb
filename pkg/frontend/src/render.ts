/**
 * Figure rendering entry point: CSV in, SVG or PNG out.
 */

import { writeFileSync } from "fs";

import { readCsv } from "./csv";
import { FigureSpec, figureData } from "./figure";
import { renderSvg } from "./svg";

export function renderToSvgString(spec: FigureSpec): string {
  const table = readCsv(spec.csvPath);
  const data = figureData(table, spec);
  return renderSvg(data, spec.width ?? 760, spec.height ?? 520);
}

export function render(spec: FigureSpec): void {
  const svg = renderToSvgString(spec);
  if (spec.outPath.endsWith(".svg")) {
    writeFileSync(spec.outPath, svg);
    return;
  }
  // rasterize for any other extension (.png)
  const { Resvg } = require("@resvg/resvg-js");
  const png = new Resvg(svg, { fitTo: { mode: "original" } }).render().asPng();
  writeFileSync(spec.outPath, png);
}
