/** Order statistics with the same linear-interpolation quantile rule the
 * evaluation pipeline uses, so plotted medians match its summaries exactly. */

export function quantileLinear(values: number[], q: number): number {
  if (values.length === 0) throw new Error("quantile of empty set");
  const xs = [...values].sort((a, b) => a - b);
  const pos = (xs.length - 1) * q;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) return xs[lo];
  return xs[lo] + (pos - lo) * (xs[hi] - xs[lo]);
}

export function median(values: number[]): number {
  return quantileLinear(values, 0.5);
}

export function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function stdDev(values: number[]): number {
  const m = mean(values);
  return Math.sqrt(values.reduce((a, b) => a + (b - m) * (b - m), 0) / values.length);
}
