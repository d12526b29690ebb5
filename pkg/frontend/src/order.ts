/** Pure ordering and input-guard logic, kept DOM-free for testing. */

/** True when `order` is exactly a permutation of 0..m-1. */
export function isCompletePermutation(order: number[], m: number): boolean {
  if (order.length !== m) return false;
  const seen = new Set(order);
  if (seen.size !== m) return false;
  for (const v of order) {
    if (!Number.isInteger(v) || v < 0 || v >= m) return false;
  }
  return true;
}

/** New array with the element at `from` moved to position `to`. */
export function moveItem<T>(items: readonly T[], from: number, to: number): T[] {
  const out = items.slice();
  if (from === to || from < 0 || from >= out.length) return out;
  const clamped = Math.max(0, Math.min(out.length - 1, to));
  const [item] = out.splice(from, 1);
  out.splice(clamped, 0, item);
  return out;
}

/** Slider guard: the service rejects alpha outside (0, 1). */
export function clampAlpha(alpha: number): number {
  if (!Number.isFinite(alpha)) return 0.5;
  return Math.min(0.99, Math.max(0.01, alpha));
}

/** Percent label shown next to weight bars; total must stay within 0.1%. */
export function formatPercent(weight: number): string {
  return `${(weight * 100).toFixed(1)}%`;
}

export function weightsSumWithinTolerance(weights: number[], tolerance = 0.001): boolean {
  const total = weights.reduce((a, b) => a + b, 0);
  return Math.abs(total - 1.0) <= tolerance;
}
