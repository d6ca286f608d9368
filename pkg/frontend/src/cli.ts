/** Command line: plot --csv PATH [--csv PATH ...] --panel {teacher|unseen}
 *  --out FILE.png [--norm FLOAT] [--order m1,m2,...] [--title STR] */

import { parseArgs } from "node:util";

import { SchemaError } from "./csv.js";
import { Panel, renderViolinToFile } from "./violin.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        csv: { type: "string", multiple: true },
        panel: { type: "string" },
        out: { type: "string" },
        norm: { type: "string" },
        order: { type: "string" },
        title: { type: "string" },
      },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  const { values, positionals } = parsed;
  if (positionals.length > 1 || (positionals.length === 1 && positionals[0] !== "plot")) {
    console.error(`unknown command ${JSON.stringify(positionals)}; only "plot" exists`);
    return 2;
  }
  if (!values.csv || values.csv.length === 0 || !values.panel || !values.out) {
    console.error(
      "usage: didor-plot plot --csv PATH [--csv PATH ...] --panel {teacher|unseen} " +
        "--out FILE.png [--norm FLOAT] [--order m1,m2,...] [--title STR]",
    );
    return 2;
  }
  if (values.panel !== "teacher" && values.panel !== "unseen") {
    console.error(`--panel must be teacher or unseen, got ${values.panel}`);
    return 2;
  }
  let norm: number | undefined;
  if (values.norm !== undefined) {
    norm = Number(values.norm);
    if (!Number.isFinite(norm) || norm <= 0) {
      console.error(`--norm must be a positive number, got ${values.norm}`);
      return 2;
    }
  }
  try {
    const result = renderViolinToFile({
      csvPaths: values.csv,
      panel: values.panel as Panel,
      outPath: values.out,
      norm,
      methodOrder: values.order?.split(",").map((s) => s.trim()),
      title: values.title,
    });
    for (const warning of result.warnings) {
      console.warn(`warning: ${warning}`);
    }
    console.log(
      `${values.out}: ${result.violins.length} violins ` +
        `(${result.violins.map((v) => v.method).join(", ")})`,
    );
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    console.error(String(err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  new URL(import.meta.url).pathname === (await import("node:path")).resolve(process.argv[1]);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
