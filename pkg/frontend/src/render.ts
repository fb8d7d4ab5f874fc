// DOM rendering: pure payload-to-element functions, no client state.

import { formatScore, sortRows, type SortKey } from "./state.js";
import type { KwicLine, KwicPayload, SketchPayload, ViewState } from "./types.js";

export interface SketchHandlers {
  onRowClick: (collocate: string, relation: string) => void;
  sortKey: SortKey;
  onSortToggle: (key: SortKey) => void;
}

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

export function renderSketch(
  payload: SketchPayload,
  handlers: SketchHandlers,
): HTMLElement {
  const root = el("div", "sketch");
  if (payload.blocks.length === 0) {
    root.appendChild(el("p", "empty", `no sketches for "${payload.head}"`));
    return root;
  }
  for (const block of payload.blocks) {
    const section = el("section", "sketch-block");
    const heading = el("h3");
    heading.appendChild(el("span", "headword", `"${payload.head}" `));
    heading.appendChild(el("span", "relation", `${block.relation}...`));
    heading.appendChild(el("span", "total", ` ${block.total}`));
    section.appendChild(heading);

    const table = el("table", "sketch-rows");
    const head = el("tr");
    head.appendChild(el("th", "", "collocate"));
    for (const key of ["freq", "score"] as const) {
      const th = el("th", key === handlers.sortKey ? "sort active" : "sort", key);
      th.addEventListener("click", () => handlers.onSortToggle(key));
      head.appendChild(th);
    }
    table.appendChild(head);

    for (const row of sortRows(block.rows, handlers.sortKey)) {
      const tr = el("tr", "sketch-row");
      tr.dataset.collocate = row.collocate;
      tr.dataset.relation = block.relation;
      tr.appendChild(el("td", "collocate", row.collocate));
      tr.appendChild(el("td", "freq", String(row.freq)));
      tr.appendChild(el("td", "score", formatScore(row.score)));
      tr.addEventListener("click", () => handlers.onRowClick(row.collocate, block.relation));
      table.appendChild(tr);
    }
    if (block.rows.length === 0) {
      const tr = el("tr", "empty-row");
      const td = el("td", "", "(no rows)");
      td.colSpan = 3;
      tr.appendChild(td);
      table.appendChild(tr);
    }
    section.appendChild(table);
    root.appendChild(section);
  }
  return root;
}

export function renderKwicLine(line: KwicLine): HTMLElement {
  const row = el("div", "kwic-line");
  row.appendChild(el("span", "left", line.left.join(" ")));
  const node = el("span", "node");
  line.node.forEach((word, i) => {
    if (i > 0) node.appendChild(document.createTextNode(" "));
    const pos = line.node_start + i;
    if (line.highlights.includes(pos)) {
      node.appendChild(el("mark", "hit", word));
    } else {
      node.appendChild(document.createTextNode(word));
    }
  });
  row.appendChild(node);
  row.appendChild(el("span", "right", line.right.join(" ")));
  return row;
}

export interface KwicHandlers {
  onPage: (offset: number) => void;
}

export function renderKwicPanel(
  payload: KwicPayload,
  title: string,
  handlers: KwicHandlers,
): HTMLElement {
  const root = el("div", "kwic-panel");
  root.appendChild(el("h3", "", title));
  if (payload.total === 0) {
    root.appendChild(el("p", "empty", "no concordances stored for this pair"));
    return root;
  }
  for (const line of payload.lines) {
    root.appendChild(renderKwicLine(line));
  }
  const pages = Math.ceil(payload.total / payload.limit);
  if (pages > 1) {
    const nav = el("div", "pager");
    const page = Math.floor(payload.offset / payload.limit);
    const prev = el("button", "prev", "previous");
    prev.disabled = page === 0;
    prev.addEventListener("click", () =>
      handlers.onPage(Math.max(0, payload.offset - payload.limit)));
    const next = el("button", "next", "next");
    next.disabled = page >= pages - 1;
    next.addEventListener("click", () => handlers.onPage(payload.offset + payload.limit));
    nav.appendChild(prev);
    nav.appendChild(el("span", "page", `page ${page + 1} of ${pages}`));
    nav.appendChild(next);
    root.appendChild(nav);
  }
  return root;
}

export function renderError(state: ViewState): HTMLElement {
  const banner = el("div", state.error ? "banner visible" : "banner");
  if (state.error) banner.textContent = state.error;
  return banner;
}
