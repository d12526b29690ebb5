/** Landing view: the session table plus a paste-a-config creation form. */

import { Api, SessionSummary } from "./api.js";

export class SessionListView {
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly doc: Document;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly openSession: (id: string) => void,
  ) {
    this.doc = root.ownerDocument;
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), 2000);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async refresh(): Promise<void> {
    let sessions: SessionSummary[];
    try {
      sessions = await this.api.listSessions();
    } catch {
      this.renderShell("connection lost, retrying…");
      return;
    }
    this.renderShell(null, sessions);
  }

  private renderShell(banner: string | null, sessions: SessionSummary[] = []): void {
    this.root.innerHTML = "";
    if (banner !== null) {
      const b = this.doc.createElement("div");
      b.className = "banner banner-warn";
      b.textContent = banner;
      this.root.appendChild(b);
    }

    const panel = this.doc.createElement("div");
    panel.className = "panel";
    const h = this.doc.createElement("h2");
    h.textContent = "Sessions";
    panel.appendChild(h);

    if (sessions.length === 0) {
      const empty = this.doc.createElement("p");
      empty.textContent = "no sessions yet; create one below or via the CLI/service API";
      panel.appendChild(empty);
    } else {
      const table = this.doc.createElement("table");
      table.className = "session-table";
      const head = this.doc.createElement("tr");
      for (const col of ["session", "status", "phase", "rankings", "observations", ""]) {
        const th = this.doc.createElement("th");
        th.textContent = col;
        head.appendChild(th);
      }
      table.appendChild(head);
      for (const s of sessions) {
        const tr = this.doc.createElement("tr");
        tr.className = `status-${s.status}`;
        const cells = [
          s.session_id.slice(0, 8),
          s.status,
          s.phase,
          `${s.n_rankings}`,
          `${s.n_observations}`,
        ];
        for (const text of cells) {
          const td = this.doc.createElement("td");
          td.textContent = text;
          tr.appendChild(td);
        }
        const actionTd = this.doc.createElement("td");
        const open = this.doc.createElement("button");
        open.textContent = s.status === "done" ? "results" : "open";
        open.className = "open-session";
        open.dataset.sessionId = s.session_id;
        open.addEventListener("click", () => this.openSession(s.session_id));
        actionTd.appendChild(open);
        tr.appendChild(actionTd);
        table.appendChild(tr);
      }
      panel.appendChild(table);
    }
    this.root.appendChild(panel);

    const form = this.doc.createElement("div");
    form.className = "panel create-panel";
    const fh = this.doc.createElement("h3");
    fh.textContent = "New session";
    const area = this.doc.createElement("textarea");
    area.className = "config-input";
    area.rows = 6;
    area.placeholder = '{"objective": {...}, "oracle": {"kind": "deferred"}, ...}';
    const button = this.doc.createElement("button");
    button.textContent = "Create";
    button.className = "create-session";
    const msg = this.doc.createElement("span");
    msg.className = "create-msg";
    button.addEventListener("click", () => {
      void (async () => {
        try {
          const config = JSON.parse(area.value);
          const id = await this.api.createSession(config);
          msg.textContent = `created ${id.slice(0, 8)}`;
          this.openSession(id);
        } catch (err) {
          msg.textContent = err instanceof Error ? err.message : String(err);
        }
      })();
    });
    form.append(fh, area, button, msg);
    this.root.appendChild(form);
  }
}
