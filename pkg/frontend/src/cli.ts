#!/usr/bin/env node
/** openqmc-plot --kind <trajectory|variance|ratio|b_amplitude> --out <path> <csv...> */

import { writeFileSync } from "fs";
import { parseArgs } from "util";

import { FormatError } from "./csv";
import { FigureKind, KINDS, renderFigure } from "./plots";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(`argument error: ${(err as Error).message}`);
    return 2;
  }
  if (parsed.values.help) {
    console.log(
      "usage: openqmc-plot --kind <trajectory|variance|ratio|b_amplitude> " +
        "--out <figure.svg> <csv...>",
    );
    return 0;
  }
  const kind = parsed.values.kind as string | undefined;
  const out = parsed.values.out as string | undefined;
  if (!kind || !KINDS.includes(kind as FigureKind)) {
    console.error(`--kind must be one of: ${KINDS.join(", ")}`);
    return 2;
  }
  if (!out) {
    console.error("--out is required");
    return 2;
  }
  try {
    const svg = renderFigure(kind as FigureKind, parsed.positionals);
    writeFileSync(out, svg);
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof FormatError) {
      console.error(`input error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
