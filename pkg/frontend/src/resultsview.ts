/** Results explorer: candidate pool chart, alpha slider, efficient-set
 * highlights, and the blended strategy weights.
 *
 * The highlighted set and the blended weights are re-fetched from the
 * service on every slider commit; the view renders exactly what the
 * server returned for the current alpha, never a client-side guess.
 */

import { Api, ApiError, ResultsDoc } from "./api.js";
import { poolChart, weightBars } from "./charts.js";
import { clampAlpha, weightsSumWithinTolerance } from "./order.js";

export class ResultsView {
  doc: ResultsDoc | null = null;
  alpha: number | null = null;
  private readonly ownerDoc: Document;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly sessionId: string,
    private readonly onGone?: () => void,
  ) {
    this.ownerDoc = root.ownerDocument;
  }

  stop(): void {
    // no timers to tear down; present for router symmetry
  }

  async load(alpha?: number): Promise<void> {
    const requested = alpha === undefined ? undefined : clampAlpha(alpha);
    try {
      const summary = await this.api.getSession(this.sessionId);
      const doc = await this.api.getResults(
        this.sessionId, requested, summary.status !== "done",
      );
      this.doc = doc;
      this.alpha = doc.alpha;
      this.render(doc, summary.status);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.onGone?.();
        return;
      }
      this.renderError(err instanceof Error ? err.message : String(err));
    }
  }

  private render(doc: ResultsDoc, status: string): void {
    this.root.innerHTML = "";

    const header = this.ownerDoc.createElement("div");
    header.className = "panel results-header";
    const h = this.ownerDoc.createElement("h2");
    h.textContent = status === "done" ? "Efficient portfolios" : "Efficient portfolios (partial)";
    const meta = this.ownerDoc.createElement("p");
    meta.textContent =
      `${doc.candidates.length} supplemental candidates · ` +
      `${doc.n_rankings} rankings · optimum value ${doc.x_opt.value.toFixed(4)}`;
    header.append(h, meta);

    const sliderPanel = this.ownerDoc.createElement("div");
    sliderPanel.className = "panel slider-panel";
    const label = this.ownerDoc.createElement("label");
    label.textContent = "distinctness confidence α";
    const slider = this.ownerDoc.createElement("input");
    slider.type = "range";
    slider.min = "0.01";
    slider.max = "0.99";
    slider.step = "0.01";
    slider.value = String(doc.alpha);
    slider.className = "alpha-slider";
    const valueLabel = this.ownerDoc.createElement("span");
    valueLabel.className = "alpha-value";
    valueLabel.textContent = doc.alpha.toFixed(2);
    slider.addEventListener("input", () => {
      valueLabel.textContent = clampAlpha(Number(slider.value)).toFixed(2);
    });
    slider.addEventListener("change", () => {
      void this.load(Number(slider.value));
    });
    sliderPanel.append(label, slider, valueLabel);

    const chartPanel = this.ownerDoc.createElement("div");
    chartPanel.className = "panel chart-panel";
    const chartTitle = this.ownerDoc.createElement("h3");
    chartTitle.textContent = "candidates by value (efficient set highlighted)";
    chartPanel.append(
      chartTitle,
      poolChart(this.ownerDoc, doc.candidates.map((c) => c.value), new Set(doc.efficient)),
    );
    const effLine = this.ownerDoc.createElement("p");
    effLine.className = "efficient-line";
    effLine.textContent = doc.efficient.length
      ? `efficient at α=${doc.alpha.toFixed(2)}: ${doc.efficient.map((i) => `#${i}`).join(", ")}`
      : "no supplemental candidates clear the bar at this α; the optimum stands alone";
    chartPanel.appendChild(effLine);

    const blendPanel = this.ownerDoc.createElement("div");
    blendPanel.className = "panel blend-panel";
    const blendTitle = this.ownerDoc.createElement("h3");
    blendTitle.textContent = "blended strategy weights";
    blendPanel.append(blendTitle, weightBars(this.ownerDoc, doc.assets, doc.blended));
    const total = doc.blended.reduce((a, b) => a + b, 0);
    const totalLine = this.ownerDoc.createElement("p");
    totalLine.className = "blend-total";
    totalLine.textContent = `total ${(total * 100).toFixed(1)}%`;
    if (!weightsSumWithinTolerance(doc.blended)) {
      totalLine.classList.add("blend-total-bad");
    }
    blendPanel.appendChild(totalLine);

    const optPanel = this.ownerDoc.createElement("div");
    optPanel.className = "panel opt-panel";
    const optTitle = this.ownerDoc.createElement("h3");
    optTitle.textContent = "reference optimum";
    optPanel.append(optTitle, weightBars(this.ownerDoc, doc.assets, doc.x_opt.portfolio));

    this.root.append(header, sliderPanel, chartPanel, blendPanel, optPanel);
  }

  private renderError(message: string): void {
    this.root.innerHTML = "";
    const banner = this.ownerDoc.createElement("div");
    banner.className = "banner banner-error";
    banner.textContent = `cannot load results: ${message}`;
    this.root.appendChild(banner);
  }
}
