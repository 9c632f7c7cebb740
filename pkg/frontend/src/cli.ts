#!/usr/bin/env node
/**
 * Figure renderer for simulator CSV artifacts.
 *
 *   render --fig fig4a --in <dir> --out <file.svg>
 *   render --spec <spec.json> --in <dir> --out <file.svg>
 *
 * Exit codes: 0 ok, 2 bad arguments or contract violation.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";

import yargs from "yargs";

import { ArtifactError, loadTimeSeries, TimeSeriesTable } from "./csv.js";
import { builtinFigure } from "./figures.js";
import { PlotSpec, renderFigure } from "./render.js";

interface SpecFile {
  panels: PlotSpec["panels"];
  inputs: Record<string, string>;
  width?: number;
  panelHeight?: number;
}

export function runCli(argv: string[]): number {
  const args = yargs(argv)
    .command("render", "render a figure from CSV artifacts", (y) =>
      y
        .option("fig", { type: "string", describe: "built-in figure (fig4a|fig4b|fig5)" })
        .option("spec", { type: "string", describe: "JSON plot-spec file" })
        .option("in", { type: "string", demandOption: true, describe: "input directory" })
        .option("out", { type: "string", demandOption: true, describe: "output SVG path" }),
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw new ArtifactError(msg ?? String(err));
    })
    .parseSync();

  try {
    const indir = String(args.in);
    let spec: PlotSpec;
    let inputs: Record<string, string>;
    if (args.fig) {
      const builtin = builtinFigure(String(args.fig));
      spec = builtin.spec;
      inputs = builtin.inputs;
    } else if (args.spec) {
      const raw = JSON.parse(readFileSync(String(args.spec), "utf-8")) as SpecFile;
      if (!raw.panels || !raw.inputs) {
        throw new ArtifactError("spec file needs 'panels' and 'inputs'");
      }
      spec = { panels: raw.panels, width: raw.width, panelHeight: raw.panelHeight };
      inputs = raw.inputs;
    } else {
      throw new ArtifactError("one of --fig or --spec is required");
    }

    const tables = new Map<string, TimeSeriesTable>();
    for (const [key, file] of Object.entries(inputs)) {
      tables.set(key, loadTimeSeries(join(indir, file)));
    }
    const svg = renderFigure(spec, tables);
    mkdirSync(dirname(String(args.out)), { recursive: true });
    writeFileSync(String(args.out), svg);
    process.stderr.write(`wrote ${args.out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof ArtifactError || err instanceof Error) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
}

const isMain = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (isMain) {
  process.exit(runCli(process.argv.slice(2)));
}
