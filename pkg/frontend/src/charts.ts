/** Small DOM chart builders: weight bars, delta bars, and the pool chart.
 *
 * Every number rendered here comes straight from a service payload; these
 * helpers only format, they never derive new portfolio figures.
 */

import { formatPercent } from "./order.js";

export function weightBars(doc: Document, assets: string[], weights: number[]): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "weight-bars";
  weights.forEach((w, i) => {
    const row = doc.createElement("div");
    row.className = "bar-row";
    const label = doc.createElement("span");
    label.className = "bar-label";
    label.textContent = assets[i] ?? `A${i + 1}`;
    const track = doc.createElement("span");
    track.className = "bar-track";
    const fill = doc.createElement("span");
    fill.className = "bar-fill";
    fill.style.width = `${Math.min(100, w * 100).toFixed(2)}%`;
    track.appendChild(fill);
    const pct = doc.createElement("span");
    pct.className = "bar-pct";
    pct.textContent = formatPercent(w);
    row.append(label, track, pct);
    wrap.appendChild(row);
  });
  return wrap;
}

/** Signed difference bars against the reference portfolio. */
export function deltaBars(
  doc: Document,
  assets: string[],
  weights: number[],
  reference: number[],
): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "delta-bars";
  weights.forEach((w, i) => {
    const delta = w - (reference[i] ?? 0);
    const row = doc.createElement("div");
    row.className = "bar-row delta-row";
    const label = doc.createElement("span");
    label.className = "bar-label";
    label.textContent = assets[i] ?? `A${i + 1}`;
    const track = doc.createElement("span");
    track.className = "bar-track delta-track";
    const fill = doc.createElement("span");
    fill.className = `bar-fill ${delta >= 0 ? "delta-pos" : "delta-neg"}`;
    const half = Math.min(50, Math.abs(delta) * 100);
    fill.style.width = `${half.toFixed(2)}%`;
    fill.style.marginLeft = delta >= 0 ? "50%" : `${(50 - half).toFixed(2)}%`;
    track.appendChild(fill);
    const pct = doc.createElement("span");
    pct.className = "bar-pct";
    pct.textContent = `${delta >= 0 ? "+" : "−"}${(Math.abs(delta) * 100).toFixed(1)}%`;
    row.append(label, track, pct);
    wrap.appendChild(row);
  });
  return wrap;
}

/** Candidate values by pool index with the efficient members highlighted. */
export function poolChart(
  doc: Document,
  values: number[],
  highlighted: Set<number>,
): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "pool-chart";
  if (values.length === 0) {
    wrap.textContent = "no supplemental candidates";
    return wrap;
  }
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  values.forEach((v, i) => {
    const col = doc.createElement("div");
    col.className = "pool-col" + (highlighted.has(i) ? " pool-efficient" : "");
    col.dataset.index = String(i);
    col.dataset.value = String(v);
    col.title = `candidate ${i}: ${v.toFixed(4)}`;
    const dot = doc.createElement("div");
    dot.className = "pool-dot";
    dot.style.bottom = `${(((v - lo) / span) * 90 + 5).toFixed(1)}%`;
    col.appendChild(dot);
    wrap.appendChild(col);
  });
  return wrap;
}
