/** DOM builders for answer cards and evidence lists. Pure functions:
 * element in, element out, no global state. */

import type { EvidenceSource, McqOption, QueryResponse } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Words of the question worth highlighting inside evidence snippets. */
export function queryTerms(question: string): string[] {
  const seen = new Set<string>();
  for (const raw of question.toLowerCase().split(/\s+/)) {
    const term = raw.replace(/^[^\p{L}\p{N}]+|[^\p{L}\p{N}]+$/gu, "");
    if (term.length >= 3) seen.add(term);
  }
  return [...seen];
}

/**
 * Renders snippet text with query terms wrapped in <mark>. The snippet
 * string itself is inserted verbatim via text nodes — no client-side
 * truncation or rewriting.
 */
export function highlightSnippet(snippet: string, terms: string[]): HTMLElement {
  const container = el("span", "snippet-text");
  if (terms.length === 0) {
    container.textContent = snippet;
    return container;
  }
  const escaped = terms.map((t) => t.replace(/[.*+?^${}()|[\]\\]/g, "\\$&"));
  const pattern = new RegExp(`(${escaped.join("|")})`, "giu");
  let last = 0;
  for (const match of snippet.matchAll(pattern)) {
    const at = match.index ?? 0;
    if (at > last) container.append(document.createTextNode(snippet.slice(last, at)));
    const mark = el("mark");
    mark.textContent = match[0];
    container.append(mark);
    last = at + match[0].length;
  }
  if (last < snippet.length) container.append(document.createTextNode(snippet.slice(last)));
  return container;
}

export function renderEvidence(source: EvidenceSource, terms: string[]): HTMLElement {
  const details = el("details", "evidence");
  details.open = true;
  const summary = el("summary");
  summary.append(
    el("span", "evidence-file", source.filename),
    el("span", "evidence-page", ` p.${source.page}`),
    el("span", "evidence-score", ` r=${source.rank_score.toFixed(4)}`),
  );
  details.append(summary);
  const body = el("div", "evidence-snippet");
  body.append(highlightSnippet(source.snippet, terms));
  details.append(body);
  return details;
}

export function renderOptions(
  options: McqOption[],
  picked: string | null,
): HTMLElement {
  const list = el("ul", "options");
  for (const option of options) {
    const item = el("li", option.label === picked ? "option picked" : "option");
    item.textContent = `${option.label}. ${option.text}`;
    list.append(item);
  }
  return list;
}

export function renderTimings(timings: Record<string, number>): HTMLElement {
  const parts = Object.entries(timings).map(
    ([stage, ms]) => `${stage} ${ms.toFixed(1)} ms`,
  );
  return el("div", "timings", parts.join(" | "));
}

/** Answer card: answer first, cited evidence directly beneath it. */
export function renderAnswerCard(
  question: string,
  options: McqOption[] | null,
  response: QueryResponse | null,
  error: string | null,
): HTMLElement {
  const card = el("article", "card");
  card.append(el("div", "card-question", question));
  if (error !== null) {
    card.append(el("div", "card-error", error));
    return card;
  }
  if (response === null) {
    card.append(el("div", "card-pending", "Waiting for the answer..."));
    return card;
  }
  card.append(el("div", "card-answer", response.answer));
  if (options && options.length > 0) {
    card.append(renderOptions(options, response.parsed_label));
  }
  const evidence = el("section", "card-evidence");
  const terms = queryTerms(question);
  for (const source of response.sources) {
    evidence.append(renderEvidence(source, terms));
  }
  card.append(evidence);
  card.append(renderTimings(response.timings));
  for (const warning of response.warnings) {
    card.append(el("div", "card-warning", warning));
  }
  return card;
}
