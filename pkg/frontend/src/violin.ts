/** Violin-plot rendering for per-method return distributions: one violin
 * per method, a white circle (dark outline) at the median, labeled axes.
 * Rendering is deterministic for fixed input. */

import { writeFileSync } from "node:fs";

import { loadReturnsCsv, ReturnRow, SchemaError } from "./csv.js";
import { densityCurve } from "./kde.js";
import { encodePng } from "./png.js";
import { BLACK, Canvas, Color, GREY, LIGHT_GREY, WHITE } from "./raster.js";
import { median } from "./stats.js";

export type Panel = "teacher" | "unseen";

export interface PlotSpec {
  csvPaths: string[];
  panel: Panel;
  outPath: string;
  norm?: number;
  methodOrder?: string[];
  title?: string;
}

export interface RenderedViolin {
  method: string;
  median: number;
  values: number[];
}

export interface RenderResult {
  png: Buffer;
  violins: RenderedViolin[];
  warnings: string[];
}

const VIOLIN_FILLS: Color[] = [
  [102, 153, 204, 255],
  [230, 159, 0, 255],
  [86, 180, 123, 255],
  [204, 121, 167, 255],
  [146, 120, 210, 255],
  [180, 180, 90, 255],
];

function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step0 = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= step0) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

export function groupByMethod(rows: ReturnRow[], methodOrder?: string[],
                              norm?: number): { groups: Map<string, number[]>; warnings: string[] } {
  const groups = new Map<string, number[]>();
  for (const row of rows) {
    const v = norm ? row.value / norm : row.value;
    if (!groups.has(row.method)) groups.set(row.method, []);
    groups.get(row.method)!.push(v);
  }
  const warnings: string[] = [];
  if (methodOrder) {
    const present = new Set(groups.keys());
    for (const m of present) {
      if (!methodOrder.includes(m)) {
        throw new SchemaError(`method order ${JSON.stringify(methodOrder)} does not cover ${m}`);
      }
    }
    const ordered = new Map<string, number[]>();
    for (const m of methodOrder) {
      if (groups.has(m)) {
        ordered.set(m, groups.get(m)!);
      } else {
        warnings.push(`method ${m}: no rows; skipped`);
      }
    }
    return { groups: ordered, warnings };
  }
  return { groups, warnings };
}

export function renderViolin(spec: PlotSpec): RenderResult {
  if (spec.csvPaths.length === 0) {
    throw new SchemaError("no input CSV files given");
  }
  if (spec.norm !== undefined && !(spec.norm > 0)) {
    throw new SchemaError(`normalization constant must be > 0, got ${spec.norm}`);
  }
  const rows = spec.csvPaths.flatMap((p) => loadReturnsCsv(p));
  const { groups, warnings } = groupByMethod(rows, spec.methodOrder, spec.norm);
  if (groups.size === 0) {
    throw new SchemaError("no method has any return values");
  }
  for (const [m, vals] of groups) {
    if (vals.length < 2) {
      throw new SchemaError(`method ${m}: need at least 2 return values, got ${vals.length}`);
    }
  }

  const width = 900;
  const height = 560;
  const margin = { left: 78, right: 24, top: 44, bottom: 64 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const canvas = new Canvas(width, height);

  const all = [...groups.values()].flat();
  let lo = Math.min(...all);
  let hi = Math.max(...all);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.06 * (hi - lo);
  lo -= pad;
  hi += pad;
  const yPix = (v: number) => margin.top + plotH - ((v - lo) / (hi - lo)) * plotH;

  // frame and ticks
  canvas.fillRect(margin.left, margin.top, plotW, plotH, WHITE);
  for (const tick of niceTicks(lo, hi)) {
    const y = yPix(tick);
    canvas.line(margin.left, y, margin.left + plotW, y, LIGHT_GREY);
    canvas.line(margin.left - 5, y, margin.left, y, BLACK);
    const label = formatTick(tick);
    canvas.text(margin.left - 9 - canvas.textWidth(label), y - 5, label, BLACK);
  }
  canvas.line(margin.left, margin.top, margin.left, margin.top + plotH, BLACK);
  canvas.line(margin.left, margin.top + plotH, margin.left + plotW, margin.top + plotH, BLACK);

  const methods = [...groups.keys()];
  const slot = plotW / methods.length;
  const halfWidth = Math.min(0.36 * slot, 95);
  const violins: RenderedViolin[] = [];

  methods.forEach((method, i) => {
    const values = groups.get(method)!;
    const cx = margin.left + slot * (i + 0.5);
    const fill = VIOLIN_FILLS[i % VIOLIN_FILLS.length];
    const med = median(values);
    const curve = densityCurve(values);
    if (curve.degenerate) {
      // all values identical: a thin bar marks the point mass
      canvas.fillRect(cx - halfWidth, yPix(curve.ys[0]) - 1, 2 * halfWidth, 3, fill);
    } else {
      const right: Array<[number, number]> = curve.ys.map((y, k) => [
        cx + halfWidth * curve.density[k],
        yPix(y),
      ]);
      const left: Array<[number, number]> = curve.ys
        .map((y, k): [number, number] => [cx - halfWidth * curve.density[k], yPix(y)])
        .reverse();
      canvas.fillPolygon([...right, ...left], fill);
    }
    // white circle marks the median
    canvas.fillCircle(cx, yPix(med), 5, WHITE);
    canvas.strokeCircle(cx, yPix(med), 5, BLACK);
    canvas.text(cx - canvas.textWidth(method) / 2, margin.top + plotH + 10, method, BLACK);
    violins.push({ method, median: med, values });
  });

  const yLabel = spec.norm ? "return / norm" : "return";
  canvas.textVertical(8, margin.top + plotH / 2 + canvas.textWidth(yLabel) / 2, yLabel, BLACK);
  const title = spec.title ?? `${spec.panel} domains`;
  canvas.text(margin.left + plotW / 2 - canvas.textWidth(title) / 2, 14, title, BLACK);
  canvas.text(margin.left + plotW / 2 - canvas.textWidth("method") / 2,
              height - 22, "method", GREY);

  return { png: encodePng(canvas), violins, warnings };
}

export function renderViolinToFile(spec: PlotSpec): RenderResult {
  const result = renderViolin(spec);
  writeFileSync(spec.outPath, result.png);
  return result;
}
