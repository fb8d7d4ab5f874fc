// Payload shapes of the HTTP API, kept in sync with the documented schemas.

export interface SketchRow {
  collocate: string;
  freq: number;
  score: number;
}

export interface SketchBlock {
  relation: string;
  total: number;
  rows: SketchRow[];
}

export interface SketchPayload {
  version: number;
  head: string;
  blocks: SketchBlock[];
}

export interface KwicLine {
  sentence_id: number;
  left: string[];
  node: string[];
  right: string[];
  node_start: number;
  highlights: number[];
}

export interface KwicPayload {
  version: number;
  total: number;
  offset: number;
  limit: number;
  lines: KwicLine[];
}

export interface RelationInfo {
  forward: string;
  inverse: string;
  family: string;
  rules: number;
}

export interface RelationsPayload {
  version: number;
  relations: RelationInfo[];
}

export interface MetaPayload {
  version: number;
  tokens: number;
  sentences: number;
  docs: number;
  grammar: { name: string; version: string; rules: number };
  annotations: number;
}

export interface KwicTarget {
  head: string;
  collocate: string;
  relation: string | null;
}

export interface ViewState {
  lemma: string;
  relationFilter: string | null;
  sketch: SketchPayload | null;
  kwic: KwicPayload | null;
  kwicTarget: KwicTarget | null;
  queryText: string;
  queryResult: KwicPayload | null;
  error: string | null;
  pageSize: number;
}

export const initialState: ViewState = {
  lemma: "",
  relationFilter: null,
  sketch: null,
  kwic: null,
  kwicTarget: null,
  queryText: "",
  queryResult: null,
  error: null,
  pageSize: 20,
};
