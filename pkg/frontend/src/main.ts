/** DOM wiring for the review console.
 *
 * Keyboard shortcuts: c = confirm, r = reject, n = skip to next card,
 * d = toggle dashboard. All data comes from the public service endpoints.
 */

import { ApiClient } from "./api.js";
import { classRows, formatKappa } from "./dashboard.js";
import { ReviewSession } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderCard(session: ReviewSession): void {
  const card = session.card;
  const panel = el<HTMLDivElement>("card");
  if (card === null) {
    panel.innerHTML = `<p class="drained">Queue is empty — nothing left to review.</p>`;
    return;
  }
  const context = card.context
    .map((s, i) =>
      i === card.context_offset
        ? `<mark>${escapeHtml(s)}</mark>`
        : `<span class="ctx">${escapeHtml(s)}</span>`,
    )
    .join(" ");
  panel.innerHTML = `
    <header>
      <span class="doc">${escapeHtml(card.doc_title)}</span>
      <span class="lang">${escapeHtml(card.language)}</span>
    </header>
    <p class="proposal">${escapeHtml(card.kind)}: <strong>${escapeHtml(card.proposed_class)}</strong>
      <span class="score">score ${card.score === null ? "—" : card.score.toFixed(3)}</span></p>
    <p class="context">${context}</p>
    <p class="hint">c confirm · r reject · n next · d dashboard</p>`;
}

function renderStatus(session: ReviewSession): void {
  const bits = [`${session.decided} decided`];
  if (session.requeued.length > 0) {
    bits.push(`${session.requeued.length} re-queued (lease lost)`);
  }
  el<HTMLDivElement>("status").textContent = bits.join(" · ");
}

async function renderDashboard(api: ApiClient): Promise<void> {
  const progress = await api.progress();
  const rows = classRows(progress)
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.label)}</td><td>${row.confirmed}</td>` +
        `<td>${row.rejected}</td><td>${row.pending}</td>` +
        `<td>${(row.done * 100).toFixed(0)}%</td></tr>`,
    )
    .join("");
  const kappa = formatKappa(progress)
    .map((line) => `<li>${escapeHtml(line)}</li>`)
    .join("");
  el<HTMLDivElement>("dashboard").innerHTML = `
    <table>
      <thead><tr><th>class</th><th>✓</th><th>✗</th><th>pending</th><th>done</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <ul class="kappa">${kappa.length > 0 ? kappa : "<li>no rater overlap yet</li>"}</ul>`;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("service") ?? "";
  const raterId = params.get("rater") ?? "anonymous";
  const api = new ApiClient(baseUrl, fetch.bind(window), params.get("token") ?? undefined);
  const session = new ReviewSession(api, raterId);

  const refresh = () => {
    renderCard(session);
    renderStatus(session);
  };

  document.addEventListener("keydown", async (event) => {
    if (event.key === "c" && session.card) {
      await session.decide("confirm");
      refresh();
    } else if (event.key === "r" && session.card) {
      await session.decide("reject");
      refresh();
    } else if (event.key === "n") {
      await session.loadNext();
      refresh();
    } else if (event.key === "d") {
      const panel = el<HTMLDivElement>("dashboard");
      panel.hidden = !panel.hidden;
      if (!panel.hidden) await renderDashboard(api);
    }
  });

  await session.loadNext();
  refresh();
}

if (typeof document !== "undefined" && document.getElementById("card")) {
  void start();
}
