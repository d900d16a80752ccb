#!/usr/bin/env node
/**
 * render --csv <path> --kind <rate-vs-n|dof-contour> --out <path.png|path.svg>
 *        [--log-dof] [--width <px>] [--height <px>]
 */

import { SchemaError } from "./csv";
import { FigureKind, FigureSpec } from "./figure";
import { render } from "./render";

function usage(): string {
  return "usage: mimolab-render render --csv <path> --kind " +
         "<rate-vs-n|dof-contour> --out <path.png> [--log-dof] " +
         "[--width <px>] [--height <px>]";
}

export function parseArgs(argv: string[]): FigureSpec {
  if (argv[0] !== "render") {
    throw new SchemaError(usage());
  }
  const flags = new Map<string, string>();
  let logDof = false;
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--log-dof") {
      logDof = true;
      continue;
    }
    if (!arg.startsWith("--") || i + 1 >= argv.length) {
      throw new SchemaError(usage());
    }
    flags.set(arg.slice(2), argv[++i]);
  }
  const csvPath = flags.get("csv");
  const kind = flags.get("kind");
  const outPath = flags.get("out");
  if (!csvPath || !kind || !outPath) {
    throw new SchemaError(usage());
  }
  if (kind !== "rate-vs-n" && kind !== "dof-contour") {
    throw new SchemaError(`unknown figure kind "${kind}"`);
  }
  const spec: FigureSpec = { csvPath, kind: kind as FigureKind, outPath, logDof };
  const width = flags.get("width");
  const height = flags.get("height");
  if (width !== undefined) spec.width = Number(width);
  if (height !== undefined) spec.height = Number(height);
  return spec;
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    render(spec);
    console.log(`wrote ${spec.outPath}`);
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return err instanceof SchemaError ? 2 : 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
