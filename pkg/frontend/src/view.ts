// HTML rendering as pure string functions so the view layer is testable
// without a browser. main.ts assigns the results to innerHTML.

import type { AlternativeInfo, OracleRequestFrame } from "./protocol.js";
import type { FeedEntry, SessionState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// Structured pretty form: top-level functor emphasized, arguments listed;
// the canonical text goes in the tooltip.
export function prettyTerm(term: string): string {
  const m = term.match(/^([a-z][A-Za-z0-9_']*)\((.*)\)$/);
  if (!m) {
    return `<span class="term" title="${escapeHtml(term)}">${escapeHtml(term)}</span>`;
  }
  const args = splitArgs(m[2]).map(escapeHtml).join(", ");
  return (
    `<span class="term" title="${escapeHtml(term)}">` +
    `<b>${escapeHtml(m[1])}</b>(${args})</span>`
  );
}

export function splitArgs(text: string): string[] {
  const out: string[] = [];
  let depth = 0;
  let current = "";
  for (const ch of text) {
    if (ch === "," && depth === 0) {
      out.push(current);
      current = "";
      continue;
    }
    if (ch === "(" || ch === "[") {
      depth += 1;
    } else if (ch === ")" || ch === "]") {
      depth -= 1;
    }
    current += ch;
  }
  if (current !== "") {
    out.push(current);
  }
  return out;
}

export function renderBanner(banner: string | null): string {
  if (banner === null) {
    return "";
  }
  return `<div class="banner">${escapeHtml(banner)}</div>`;
}

export function renderStatePanel(state: SessionState): string {
  if (state.agent === null) {
    return "";
  }
  const halted = state.halted ? ' <span class="halted">(run ended)</span>' : "";
  return (
    `<div class="state-panel">` +
    `<h2>${escapeHtml(state.agent)}</h2>` +
    `<div class="current-state">${prettyTerm(state.stateTerm)}</div>${halted}` +
    `</div>`
  );
}

export function renderFeedLine(entry: FeedEntry): string {
  const cls = entry.own ? "feed-own" : "feed-recv";
  const label =
    entry.kind === "oracle"
      ? `${escapeHtml(entry.agent)}(oracle(...))`
      : escapeHtml(entry.agent);
  return (
    `<li class="${cls}" data-index="${entry.index}">` +
    `<span class="idx">H / ${entry.index}</span> ` +
    `${label}: ${prettyTerm(entry.payload)}</li>`
  );
}

export function renderFeed(state: SessionState): string {
  const lines = state.feed.map(renderFeedLine).join("");
  return `<ol class="feed">${lines}</ol>`;
}

function renderChoiceButtons(alt: AlternativeInfo): string {
  return alt.choice_options
    .map((choice) =>
      choice.options
        .map(
          (option, i) =>
            `<button class="choice" data-alt="${alt.index}" ` +
            `data-var="${escapeHtml(choice.var)}" ` +
            `data-option="${escapeHtml(option)}">${escapeHtml(option)}</button>`,
        )
        .join(""),
    )
    .join("");
}

function renderVarInputs(alt: AlternativeInfo, domain: string[]): string {
  return alt.required_vars
    .map((v) => {
      const listId = `domain-${alt.index}-${v}`;
      const options = domain
        .map((d) => `<option value="${escapeHtml(d)}"></option>`)
        .join("");
      return (
        `<label>${escapeHtml(v)} = ` +
        `<input name="${escapeHtml(v)}" data-alt="${alt.index}" ` +
        `list="${listId}" autocomplete="off">` +
        `<datalist id="${listId}">${options}</datalist></label>`
      );
    })
    .join("");
}

export function renderRequest(pending: OracleRequestFrame | null): string {
  if (pending === null) {
    return "";
  }
  const alts = pending.alternatives
    .map(
      (alt) =>
        `<fieldset class="alternative" data-alt="${alt.index}">` +
        `<legend>${prettyTerm(alt.act_pattern)}</legend>` +
        renderVarInputs(alt, pending.domain) +
        renderChoiceButtons(alt) +
        `<button class="submit" data-alt="${alt.index}">take this step</button>` +
        `</fieldset>`,
    )
    .join("");
  return (
    `<div class="request" data-request="${pending.request_id}">` +
    `<h3>your choice</h3>${alts}` +
    `<button class="pass">pass</button></div>`
  );
}

export function renderSession(state: SessionState): string {
  return (
    renderBanner(state.banner) +
    renderStatePanel(state) +
    renderRequest(state.pending) +
    renderFeed(state)
  );
}
