// View state and the actions that mutate it.
//
// Every async action takes a ticket from a per-panel sequence; a response is
// applied only if its ticket is still the latest for that panel, so a slow
// earlier request can never overwrite a newer one.  Failed requests surface
// in the error banner and leave the previous panel content untouched.

import type { ApiLike } from "./api.js";
import type { SketchRow, ViewState } from "./types.js";
import { initialState } from "./types.js";

export type SortKey = "score" | "freq";

export function sortRows(rows: readonly SketchRow[], key: SortKey): SketchRow[] {
  const other: SortKey = key === "score" ? "freq" : "score";
  return [...rows].sort(
    (a, b) => b[key] - a[key] || b[other] - a[other] || a.collocate.localeCompare(b.collocate),
  );
}

export function formatScore(score: number): string {
  return score.toFixed(2);
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

type Panel = "sketch" | "kwic" | "query";

export class Store {
  state: ViewState = { ...initialState };
  private listeners: Array<(state: ViewState) => void> = [];
  private tickets: Record<Panel, number> = { sketch: 0, kwic: 0, query: 0 };

  constructor(private readonly client: ApiLike) {}

  subscribe(listener: (state: ViewState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private apply(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  private take(panel: Panel): number {
    this.tickets[panel] += 1;
    return this.tickets[panel];
  }

  private current(panel: Panel, ticket: number): boolean {
    return this.tickets[panel] === ticket;
  }

  async showSketch(lemma: string, relation: string | null = null): Promise<void> {
    const ticket = this.take("sketch");
    this.take("kwic"); // a drill for the previous headword must never land here
    try {
      const sketch = await this.client.sketch(lemma, relation ?? undefined);
      if (!this.current("sketch", ticket)) return;
      this.apply({
        lemma,
        relationFilter: relation,
        sketch,
        kwic: null,
        kwicTarget: null,
        error: null,
      });
    } catch (err) {
      if (!this.current("sketch", ticket)) return;
      this.apply({ error: describe(err) });
    }
  }

  async drillKwic(collocate: string, relation: string, offset = 0): Promise<void> {
    const head = this.state.lemma;
    const ticket = this.take("kwic");
    try {
      const kwic = await this.client.kwic(
        head, collocate, relation, 8, offset, this.state.pageSize,
      );
      if (!this.current("kwic", ticket)) return;
      this.apply({
        kwic,
        kwicTarget: { head, collocate, relation },
        error: null,
      });
    } catch (err) {
      if (!this.current("kwic", ticket)) return;
      this.apply({ error: describe(err) });
    }
  }

  async turnKwicPage(offset: number): Promise<void> {
    const target = this.state.kwicTarget;
    if (!target) return;
    const ticket = this.take("kwic");
    try {
      const kwic = await this.client.kwic(
        target.head, target.collocate, target.relation, 8, offset, this.state.pageSize,
      );
      if (!this.current("kwic", ticket)) return;
      this.apply({ kwic, error: null });
    } catch (err) {
      if (!this.current("kwic", ticket)) return;
      this.apply({ error: describe(err) });
    }
  }

  async runQuery(cql: string): Promise<void> {
    const ticket = this.take("query");
    try {
      const queryResult = await this.client.query(cql, 8, this.state.pageSize);
      if (!this.current("query", ticket)) return;
      this.apply({ queryText: cql, queryResult, error: null });
    } catch (err) {
      if (!this.current("query", ticket)) return;
      this.apply({ queryText: cql, error: describe(err) });
    }
  }

  setPageSize(pageSize: number): void {
    this.apply({ pageSize });
  }
}
