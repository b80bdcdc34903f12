// Pure HTML rendering of the dashboard model. Keeping this a string
// function makes every visual state assertable in tests without a DOM.

import type { DashboardModel, DirectiveRow, HostRow } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function levelClass(level: number | null): string {
  if (level === null) {
    return "level-unknown";
  }
  return level <= 2 ? "level-high" : level === 3 ? "level-elevated" : "level-normal";
}

function hostRow(h: HostRow): string {
  const modules = h.modules.map((m) => `<span class="chip">${escapeHtml(m)}</span>`).join(" ");
  const prebuilt = h.prebuilt
    .map((m) => `<span class="chip chip-ghost">${escapeHtml(m)} (prebuilt)</span>`)
    .join(" ");
  const isolated = h.isolated
    ? '<span class="badge badge-isolated">isolated</span>'
    : '<span class="badge badge-ok">online</span>';
  return `<tr data-host-id="${h.hostId}">
    <td class="mono">${h.hostId}</td>
    <td>${escapeHtml(h.name)}</td>
    <td>${escapeHtml(h.subnet)}</td>
    <td>${escapeHtml(h.status)}</td>
    <td>${modules} ${prebuilt}</td>
    <td>${isolated}</td>
  </tr>`;
}

function verificationDetail(d: DirectiveRow): string {
  if (d.status === "failed") {
    const mismatches = d.verification?.mismatches ?? [];
    if (mismatches.length > 0) {
      const ports = [...new Set(mismatches.map((m) => m.port))].join(", ");
      return `<div class="detail">scan mismatch on port(s) ${escapeHtml(ports)}</div>`;
    }
    const failedAction = d.actions.find((a) => a.status === "failed");
    if (failedAction?.detail) {
      return `<div class="detail">${escapeHtml(failedAction.detail)}</div>`;
    }
  }
  return "";
}

function directivePanel(d: DirectiveRow): string {
  const badge = `<span class="badge badge-${escapeHtml(d.status)}">${escapeHtml(d.status)}</span>`;
  const optimistic = d.optimistic ? " (submitting...)" : "";
  const actions = d.actions
    .map((a) => `<li class="${a.status}">${escapeHtml(a.action)} - ${escapeHtml(a.status)}</li>`)
    .join("");
  return `<article class="directive" data-directive-id="${d.directiveId}">
    <header>#${d.directiveId} CPCON ${d.cpconLevel} / ${escapeHtml(d.threat)}
      <span class="issuer">${escapeHtml(d.issuer)}${optimistic}</span> ${badge}</header>
    <ul>${actions}</ul>
    ${verificationDetail(d)}
  </article>`;
}

export function renderState(model: DashboardModel): string {
  const badge = model.cpconBadge === null ? "?" : String(model.cpconBadge);
  const recommendations = model.recommendations
    .map(
      (r) => `<div class="banner" data-rec-id="${r.rec_id}">
      Escalation recommended: CPCON ${r.proposed_level} (${escapeHtml(r.threat)})
      <button class="approve" data-rec-id="${r.rec_id}">Approve</button>
      <button class="dismiss" data-rec-id="${r.rec_id}">Dismiss</button>
    </div>`,
    )
    .join("");
  const hosts = model.hosts.map(hostRow).join("");
  const alerts = model.alerts
    .map(
      (a) => `<li class="${a.quarantined ? "quarantined" : ""}">
      <span class="mono">t+${a.ts}ms</span>
      host ${a.hostId}: <strong>${escapeHtml(a.eventType)}</strong>
      (level ${a.cpconLevel})${a.actionsTaken.length ? " - " + escapeHtml(a.actionsTaken.join(", ")) : ""}
    </li>`,
    )
    .join("");
  const directives = model.directives.map(directivePanel).join("");
  return `
  <div class="cpcon-badge ${levelClass(model.cpconBadge)}" id="cpcon-badge">CPCON ${badge}</div>
  <section id="recommendations">${recommendations}</section>
  <section id="hosts">
    <h2>Hosts</h2>
    <table>
      <thead><tr><th>ID</th><th>Name</th><th>Subnet</th><th>Status</th><th>Modules</th><th>Network</th></tr></thead>
      <tbody>${hosts}</tbody>
    </table>
  </section>
  <section id="alerts"><h2>Alerts</h2><ul>${alerts}</ul></section>
  <section id="directives"><h2>Directives</h2>${directives}</section>`;
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner banner-error">dashboard error: ${escapeHtml(message)}</div>`;
}
