/**
 * Pure HTML-string renderers. Every number shown comes straight from a
 * service payload; nothing is computed or re-thresholded here, which keeps
 * the service the single source of truth (and these functions testable
 * without a DOM).
 */

import type { ClassifyResponse, ExpertExplanation, ExplainReport, ItemResult } from "./types";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function pct(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

function expertCell(result: ItemResult): string {
  return result.experts
    .map(
      (e) =>
        `<span class="expert" title="${escapeHtml(e.class_name)} (${escapeHtml(e.variant)})">` +
        `${escapeHtml(e.class_name)}:${escapeHtml(e.variant)} ${pct(e.positive_probability)}</span>`,
    )
    .join(" ");
}

function metaCell(result: ItemResult): string {
  return Object.entries(result.meta_probabilities)
    .map(([name, p]) => `<span class="meta">${escapeHtml(name)} ${pct(p)}</span>`)
    .join(" ");
}

export function renderResultRow(result: ItemResult, index: number): string {
  const badge = result.reliable
    ? '<span class="badge reliable">reliable</span>'
    : '<span class="badge unreliable">unreliable</span>';
  const title = result.section_title === null ? "<em>(no title)</em>" : escapeHtml(result.section_title);
  return (
    `<tr class="${result.reliable ? "row-reliable" : "row-unreliable"}" data-index="${index}">` +
    `<td>${title}</td>` +
    `<td class="context">${escapeHtml(result.context)}</td>` +
    `<td>${escapeHtml(result.setting)}</td>` +
    `<td>${expertCell(result)}</td>` +
    `<td>${metaCell(result)}</td>` +
    `<td>${escapeHtml(result.predicted_class)}</td>` +
    `<td><a href="${escapeHtml(result.cito_iri)}" target="_blank" rel="noopener">${escapeHtml(
      result.cito_iri,
    )}</a></td>` +
    `<td>${badge}</td>` +
    `</tr>`
  );
}

export function renderResultsTable(payload: ClassifyResponse): string {
  const rows = payload.results.map(renderResultRow).join("");
  return (
    '<table class="results">' +
    "<thead><tr><th>Section</th><th>Context</th><th>Setting</th><th>Expert confidences</th>" +
    "<th>Aggregator confidences</th><th>Predicted</th><th>CiTO property</th><th>Reliability</th></tr></thead>" +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderErrorBanner(message: string): string {
  return `<div class="error-banner" role="alert">${escapeHtml(message)}</div>`;
}

/**
 * Token highlights for one expert: hue by sign (positive supports the
 * expert's class, negative rejects it), opacity by magnitude relative to the
 * largest attribution in the panel. All-zero attributions render neutrally.
 */
export function renderTokenHighlights(tokens: [string, number][]): string {
  const maxAbs = tokens.reduce((acc, [, v]) => Math.max(acc, Math.abs(v)), 0);
  const spans = tokens.map(([token, value]) => {
    const strength = maxAbs === 0 ? 0 : Math.abs(value) / maxAbs;
    const hue = value >= 0 ? "0, 90%, 60%" : "215, 90%, 55%";
    const style = strength === 0 ? "" : ` style="background: hsla(${hue}, ${(0.15 + 0.65 * strength).toFixed(3)})"`;
    return `<span class="token"${style} title="${value.toExponential(3)}">${escapeHtml(token)}</span>`;
  });
  return `<div class="token-line">${spans.join(" ")}</div>`;
}

export function renderExpertPanel(expert: ExpertExplanation): string {
  const mass = expert.attribution_mass;
  return (
    '<section class="expert-panel">' +
    `<h4>${escapeHtml(expert.class_name)} (${escapeHtml(expert.variant)}) ` +
    `<span class="prob">${pct(expert.positive_probability)}</span></h4>` +
    `<div class="mass">mass +${mass.positive.toFixed(4)} / -${mass.negative.toFixed(4)} ` +
    `(signed ${mass.signed.toFixed(4)})</div>` +
    renderTokenHighlights(expert.token_attributions) +
    "</section>"
  );
}

export function renderExplainReport(report: ExplainReport): string {
  const fallback = report.ws_fallback
    ? '<div class="note">formatted without its section title (none present)</div>'
    : "";
  const panels = report.experts.map(renderExpertPanel).join("");
  return (
    `<article class="explain-report" data-instance="${escapeHtml(report.instance_id)}">` +
    `<h3>${escapeHtml(report.context)}</h3>` +
    `<div class="verdict">${escapeHtml(report.predicted_class)} &rarr; ` +
    `<a href="${escapeHtml(report.cito_iri)}">${escapeHtml(report.cito_iri)}</a></div>` +
    fallback +
    panels +
    "</article>"
  );
}
