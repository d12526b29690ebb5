/** Hash-routed single-page shell: #/ list, #/session/<id> ranking,
 * #/session/<id>/results exploration. */

import { Api } from "./api.js";
import { QueryView } from "./queryview.js";
import { ResultsView } from "./resultsview.js";
import { SessionListView } from "./sessionlist.js";

interface Stoppable {
  stop?(): void;
}

export function startApp(root: HTMLElement, api: Api = new Api()): void {
  const doc = root.ownerDocument;
  const win = doc.defaultView!;
  let active: Stoppable | null = null;

  const nav = doc.createElement("div");
  nav.className = "topnav";
  const brand = doc.createElement("a");
  brand.href = "#/";
  brand.className = "brand";
  brand.textContent = "prefolio";
  nav.appendChild(brand);
  const outlet = doc.createElement("div");
  outlet.id = "outlet";
  root.append(nav, outlet);

  function goTo(hash: string): void {
    win.location.hash = hash;
  }

  function route(): void {
    active?.stop?.();
    active = null;
    outlet.innerHTML = "";
    const hash = win.location.hash || "#/";
    const resultsMatch = hash.match(/^#\/session\/([^/]+)\/results$/);
    const sessionMatch = hash.match(/^#\/session\/([^/]+)$/);

    if (resultsMatch) {
      const view = new ResultsView(outlet, api, resultsMatch[1], () => goTo("#/"));
      void view.load();
      active = view;
    } else if (sessionMatch) {
      const view = new QueryView(outlet, api, sessionMatch[1], { onGone: () => goTo("#/") });
      view.start();
      active = view;
    } else {
      const view = new SessionListView(outlet, api, (id) => goTo(`#/session/${id}`));
      view.start();
      active = view;
    }
  }

  win.addEventListener("hashchange", route);
  route();
}

declare global {
  interface Window {
    __prefolioAutostart?: boolean;
  }
}

if (typeof window !== "undefined" && window.__prefolioAutostart !== false) {
  const mount = window.document.getElementById("app");
  if (mount) startApp(mount);
}
