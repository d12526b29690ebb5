/** Ranking view: poll for the pending query, let the user arrange the
 * candidate cards least -> most distinct, submit, repeat.
 *
 * Polling runs on a 1 s interval and pauses while a submission is in
 * flight; at most one mutation is ever outstanding.  A 409 on submit
 * means the pending query changed under us, so the view refreshes to
 * whatever the server now holds.  Network failures surface as a retry
 * banner, and an unknown session routes back to the list.
 */

import { Api, ApiError, PendingQuery, SessionSummary } from "./api.js";
import { deltaBars, weightBars } from "./charts.js";
import { DragList, MeasureFn } from "./draglist.js";
import { isCompletePermutation } from "./order.js";

export interface QueryViewHooks {
  onGone?: () => void; // 404: session vanished
  measure?: MeasureFn; // test seam for headless drag geometry
  pollIntervalMs?: number;
}

interface Notice {
  text: string;
  kind: "warn" | "error";
  sticky: boolean; // submission rejections persist across re-renders
}

export class QueryView {
  order: number[] = [];
  query: PendingQuery | null = null;
  inFlight = false;
  private notice: Notice | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private dragList: DragList | null = null;
  private readonly doc: Document;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly sessionId: string,
    private readonly hooks: QueryViewHooks = {},
  ) {
    this.doc = root.ownerDocument;
  }

  start(): void {
    void this.poll();
    this.timer = setInterval(() => void this.poll(), this.hooks.pollIntervalMs ?? 1000);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async poll(): Promise<void> {
    if (this.inFlight) return; // polling pauses during a submission
    try {
      const summary = await this.api.getSession(this.sessionId);
      if (summary.status === "awaiting_ranking") {
        const query = await this.api.getQuery(this.sessionId);
        if (query !== null && query.query_id !== this.query?.query_id) {
          this.query = query;
          this.renderQuery(query, summary);
        }
      } else {
        this.query = null;
        this.renderIdle(summary);
        if (summary.status === "done") this.stop();
      }
      if (this.notice && !this.notice.sticky) this.clearBanner();
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.stop();
        this.hooks.onGone?.();
        return;
      }
      this.showBanner("connection lost, retrying…", "warn");
    }
  }

  private renderIdle(summary: SessionSummary): void {
    this.root.innerHTML = "";
    const panel = this.doc.createElement("div");
    panel.className = "panel idle-panel";
    const h = this.doc.createElement("h2");
    const p = this.doc.createElement("p");
    if (summary.status === "done") {
      h.textContent = "Session complete";
      const link = this.doc.createElement("a");
      link.href = `#/session/${this.sessionId}/results`;
      link.textContent = "explore the efficient portfolios";
      link.className = "results-link";
      p.append("All rankings are in. ", link);
    } else if (summary.status === "failed") {
      h.textContent = "Session failed";
      p.textContent = summary.error ?? "unknown error";
    } else {
      h.textContent = "Optimizing…";
      p.textContent =
        `phase ${summary.phase}: ${summary.n_observations} evaluations so far. ` +
        "The next ranking request will appear here.";
    }
    panel.append(h, p);
    this.root.appendChild(panel);
    this.paintBanner();
  }

  private renderQuery(query: PendingQuery, summary: SessionSummary): void {
    this.root.innerHTML = "";
    const assets = query.assets;

    const header = this.doc.createElement("div");
    header.className = "panel query-header";
    const h = this.doc.createElement("h2");
    h.textContent = `Ranking ${summary.n_rankings + 1}: order by distinctness`;
    const sub = this.doc.createElement("p");
    sub.textContent =
      "Drag the candidates so the one most similar to the reference is on top " +
      "and the most distinct is at the bottom.";
    header.append(h, sub);

    const refPanel = this.doc.createElement("div");
    refPanel.className = "panel reference-panel";
    const refTitle = this.doc.createElement("h3");
    refTitle.textContent = "Reference (current optimum)";
    refPanel.append(refTitle, weightBars(this.doc, assets, query.reference.weights));

    const list = this.doc.createElement("div");
    list.className = "candidate-list";
    query.candidates.forEach((candidate, i) => {
      list.appendChild(this.candidateCard(i, candidate.weights, query.reference.weights, assets));
    });

    const controls = this.doc.createElement("div");
    controls.className = "panel submit-panel";
    const submit = this.doc.createElement("button");
    submit.className = "submit-button";
    submit.textContent = "Submit ranking";
    submit.addEventListener("click", () => void this.submit());
    const note = this.doc.createElement("span");
    note.className = "submit-note";
    note.textContent = `query ${query.query_id} · ${query.n_phase2_done}/${query.n_phase2} answered`;
    controls.append(submit, note);

    this.root.append(header, refPanel, list, controls);

    this.dragList = new DragList(
      list,
      (order) => {
        this.order = order;
        this.refreshPositionLabels(list);
        this.updateSubmitState();
      },
      this.hooks.measure,
    );
    this.dragList.attach();
    this.order = this.dragList.order.slice();
    this.refreshPositionLabels(list);
    this.updateSubmitState();
    this.paintBanner();
  }

  private candidateCard(
    index: number,
    weights: number[],
    reference: number[],
    assets: string[],
  ): HTMLElement {
    const card = this.doc.createElement("div");
    card.className = "candidate-card";
    card.dataset.candidate = String(index);

    const top = this.doc.createElement("div");
    top.className = "card-top";
    const pos = this.doc.createElement("span");
    pos.className = "card-position";
    const name = this.doc.createElement("span");
    name.className = "card-name";
    name.textContent = `candidate ${String.fromCharCode(65 + index)}`;
    const up = this.doc.createElement("button");
    up.className = "move-up";
    up.textContent = "▲";
    up.addEventListener("click", () => this.moveCard(card, -1));
    const down = this.doc.createElement("button");
    down.className = "move-down";
    down.textContent = "▼";
    down.addEventListener("click", () => this.moveCard(card, 1));
    top.append(pos, name, up, down);

    const body = this.doc.createElement("div");
    body.className = "card-body";
    const weightsCol = this.doc.createElement("div");
    const wTitle = this.doc.createElement("h4");
    wTitle.textContent = "weights";
    weightsCol.append(wTitle, weightBars(this.doc, assets, weights));
    const deltaCol = this.doc.createElement("div");
    const dTitle = this.doc.createElement("h4");
    dTitle.textContent = "vs reference";
    deltaCol.append(dTitle, deltaBars(this.doc, assets, weights, reference));
    body.append(weightsCol, deltaCol);

    card.append(top, body);
    return card;
  }

  private moveCard(card: HTMLElement, direction: -1 | 1): void {
    if (!this.dragList || !card.parentElement) return;
    const display = Array.prototype.indexOf.call(card.parentElement.children, card);
    this.dragList.move(display, direction);
  }

  private refreshPositionLabels(list: HTMLElement): void {
    const children = Array.from(list.children) as HTMLElement[];
    children.forEach((el, i) => {
      const label = el.querySelector(".card-position");
      if (label) {
        label.textContent =
          i === 0 ? "1 · least distinct"
          : i === children.length - 1 ? `${i + 1} · most distinct`
          : String(i + 1);
      }
    });
  }

  private updateSubmitState(): void {
    const submit = this.root.querySelector<HTMLButtonElement>(".submit-button");
    if (!submit) return;
    const complete = this.query !== null && isCompletePermutation(this.order, this.query.m);
    submit.disabled = !complete || this.inFlight;
  }

  async submit(): Promise<void> {
    if (this.inFlight || this.query === null) return;
    if (!isCompletePermutation(this.order, this.query.m)) return;
    this.inFlight = true;
    this.updateSubmitState();
    const submitted = this.query.query_id;
    try {
      await this.api.postRanking(this.sessionId, submitted, this.order);
      this.query = null;
      this.clearBanner();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else answered, or the query rotated: resync to the server
        this.query = null;
        this.showBanner("that query was already answered; loading the current one", "warn", true);
      } else if (err instanceof ApiError) {
        this.showBanner(`submission rejected (${err.status}): ${err.message}`, "error", true);
      } else {
        this.showBanner("network error during submit, retrying soon", "warn");
      }
    } finally {
      this.inFlight = false;
      this.updateSubmitState();
    }
    await this.poll(); // fetch the follow-up query without waiting a tick
  }

  private showBanner(text: string, kind: "warn" | "error", sticky = false): void {
    this.notice = { text, kind, sticky };
    this.paintBanner();
  }

  private paintBanner(): void {
    if (!this.notice) return;
    let banner = this.root.querySelector<HTMLElement>(".banner");
    if (!banner) {
      banner = this.doc.createElement("div");
      this.root.prepend(banner);
    }
    banner.className = `banner banner-${this.notice.kind}`;
    banner.textContent = this.notice.text;
  }

  private clearBanner(): void {
    this.notice = null;
    this.root.querySelector(".banner")?.remove();
  }
}
