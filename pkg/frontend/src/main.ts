// Page wiring: one store, re-render panels on every state change.

import { Client } from "./api.js";
import { renderError, renderKwicPanel, renderSketch } from "./render.js";
import { Store, type SortKey } from "./state.js";

const client = new Client("");
const store = new Store(client);
let sortKey: SortKey = "score";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function rerender(): void {
  const state = store.state;
  const bannerHost = byId<HTMLDivElement>("banner");
  bannerHost.replaceChildren(renderError(state));

  const sketchHost = byId<HTMLDivElement>("sketch");
  if (state.sketch) {
    sketchHost.replaceChildren(
      renderSketch(state.sketch, {
        sortKey,
        onSortToggle: (key) => {
          sortKey = key;
          rerender();
        },
        onRowClick: (collocate, relation) => void store.drillKwic(collocate, relation),
      }),
    );
  }

  const kwicHost = byId<HTMLDivElement>("kwic");
  if (state.kwic && state.kwicTarget) {
    const t = state.kwicTarget;
    kwicHost.replaceChildren(
      renderKwicPanel(state.kwic, `"${t.head}" ${t.relation ?? ""} "${t.collocate}"`, {
        onPage: (offset) => void store.turnKwicPage(offset),
      }),
    );
  } else {
    kwicHost.replaceChildren();
  }

  const queryHost = byId<HTMLDivElement>("query-result");
  if (state.queryResult) {
    queryHost.replaceChildren(
      renderKwicPanel(state.queryResult, `query: ${state.queryText}`, {
        onPage: () => undefined,
      }),
    );
  }
}

async function populateRelations(): Promise<void> {
  const select = byId<HTMLSelectElement>("relation");
  try {
    const payload = await client.relations();
    for (const rel of payload.relations) {
      for (const name of [rel.forward, rel.inverse]) {
        const option = document.createElement("option");
        option.value = name;
        option.textContent = name;
        select.appendChild(option);
      }
    }
  } catch {
    // the filter stays empty; searching still works
  }
}

function init(): void {
  store.subscribe(rerender);
  byId<HTMLFormElement>("search").addEventListener("submit", (event) => {
    event.preventDefault();
    const lemma = byId<HTMLInputElement>("lemma").value.trim();
    const relation = byId<HTMLSelectElement>("relation").value || null;
    if (lemma) void store.showSketch(lemma, relation);
  });
  byId<HTMLFormElement>("query-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const cql = byId<HTMLInputElement>("cql").value.trim();
    if (cql) void store.runQuery(cql);
  });
  void populateRelations();
}

document.addEventListener("DOMContentLoaded", init);
