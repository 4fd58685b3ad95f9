/**
 * figures <fig-id> --in CSV [--in CSV ...] --out IMG
 *
 * Output format follows the --out extension: .png or .svg. Exits 0 on
 * success; schema or usage failures print to stderr and exit nonzero
 * without writing the output file.
 */

import { readFileSync, realpathSync, writeFileSync } from "node:fs";
import { extname } from "node:path";
import { fileURLToPath } from "node:url";

import { SchemaError } from "./csv.js";
import { buildFigure, FIGURE_IDS, FigureId, FigureJob } from "./figures.js";
import { toPng } from "./png.js";
import { rasterize } from "./raster.js";
import { toSvg } from "./svg.js";

interface Args {
  figId: FigureId;
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new SchemaError(`usage: figures <${FIGURE_IDS.join("|")}> --in CSV [--in CSV ...] --out IMG`);
  }
  const [figId, ...rest] = argv;
  if (!(FIGURE_IDS as readonly string[]).includes(figId)) {
    throw new SchemaError(`unknown figure id '${figId}' (expected ${FIGURE_IDS.join(", ")})`);
  }
  const inputs: string[] = [];
  let out: string | undefined;
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--in") {
      if (i + 1 >= rest.length) throw new SchemaError("--in needs a path");
      inputs.push(rest[++i]);
    } else if (rest[i] === "--out") {
      if (i + 1 >= rest.length) throw new SchemaError("--out needs a path");
      out = rest[++i];
    } else {
      throw new SchemaError(`unknown argument '${rest[i]}'`);
    }
  }
  if (inputs.length === 0) throw new SchemaError("at least one --in CSV is required");
  if (!out) throw new SchemaError("--out is required");
  const ext = extname(out).toLowerCase();
  if (ext !== ".png" && ext !== ".svg") {
    throw new SchemaError(`--out must end in .png or .svg, got '${out}'`);
  }
  return { figId: figId as FigureId, inputs, out };
}

export function renderToFile(job: FigureJob, out: string): void {
  const list = buildFigure(job);
  if (extname(out).toLowerCase() === ".svg") {
    writeFileSync(out, toSvg(list));
  } else {
    writeFileSync(out, toPng(rasterize(list)));
  }
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error(`error[usage]: ${(e as Error).message}`);
    return 2;
  }
  try {
    const job: FigureJob = {
      figId: args.figId,
      inputs: args.inputs.map((path) => ({ name: path, text: readFileSync(path, "utf8") })),
    };
    renderToFile(job, args.out);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`error[schema]: ${e.message}`);
      return 3;
    }
    console.error(`error[io]: ${(e as Error).message}`);
    return 1;
  }
}

function isEntrypoint(): boolean {
  if (!process.argv[1]) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (isEntrypoint()) {
  process.exit(main(process.argv.slice(2)));
}
