/** Parsing for exported return tables (method,seed,domain,rollout,return). */

import { readFileSync } from "node:fs";

export const EXPECTED_HEADER = "method,seed,domain,rollout,return";

export interface ReturnRow {
  method: string;
  seed: string;
  domain: number;
  rollout: number;
  value: number;
}

export class SchemaError extends Error {}

export function parseReturnsCsv(text: string, source = "<csv>"): ReturnRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file; expected header ${EXPECTED_HEADER}`);
  }
  if (lines[0].trim() !== EXPECTED_HEADER) {
    throw new SchemaError(
      `${source}: bad header ${JSON.stringify(lines[0])}; expected ${EXPECTED_HEADER}`,
    );
  }
  const rows: ReturnRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 5) {
      throw new SchemaError(`${source}:${i + 1}: expected 5 columns, got ${parts.length}`);
    }
    const value = Number(parts[4]);
    if (!Number.isFinite(value)) {
      throw new SchemaError(`${source}:${i + 1}: non-finite return ${JSON.stringify(parts[4])}`);
    }
    rows.push({
      method: parts[0],
      seed: parts[1],
      domain: Number(parts[2]),
      rollout: Number(parts[3]),
      value,
    });
  }
  return rows;
}

export function loadReturnsCsv(path: string): ReturnRow[] {
  return parseReturnsCsv(readFileSync(path, "utf-8"), path);
}
