/** Gaussian kernel density for the violin outline. */

import { mean, quantileLinear, stdDev } from "./stats.js";

export interface DensityCurve {
  ys: number[]; // sample positions
  density: number[]; // density at each position, max-normalized to 1
  degenerate: boolean; // all values identical: no spread to draw
}

export function silvermanBandwidth(values: number[]): number {
  const sd = stdDev(values);
  const iqr = quantileLinear(values, 0.75) - quantileLinear(values, 0.25);
  const spread = iqr > 0 ? Math.min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * Math.pow(values.length, -0.2);
}

export function densityCurve(values: number[], points = 81): DensityCurve {
  const bw = silvermanBandwidth(values);
  if (!(bw > 0) || !Number.isFinite(bw)) {
    const v = mean(values);
    return { ys: [v], density: [1], degenerate: true };
  }
  const lo = Math.min(...values) - 3 * bw;
  const hi = Math.max(...values) + 3 * bw;
  const ys: number[] = [];
  const density: number[] = [];
  for (let i = 0; i < points; i++) {
    const y = lo + ((hi - lo) * i) / (points - 1);
    let acc = 0;
    for (const v of values) {
      const z = (y - v) / bw;
      acc += Math.exp(-0.5 * z * z);
    }
    ys.push(y);
    density.push(acc);
  }
  const peak = Math.max(...density);
  return { ys, density: density.map((d) => d / peak), degenerate: false };
}
