"""Read-only HTTP/JSON API over a built index, grammar and annotation dump.

Every payload carries a ``version`` field; unknown lemmas yield empty rows
(success), unknown relations and bad queries yield JSON error bodies with
4xx status. The server never mutates the loaded artifacts, so concurrent
reads are safe and repeated identical GETs return identical bodies.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .corpus import CorpusIndex
from .cql import CompileOptions, QueryError, CompileError, compile_rule, parse_query
from .grammar import SketchGrammar
from .matcher import KwicLine, RelationAnnotation, find_matches, kwic
from .sketches import SketchTable, aggregate, krc_for_pair, word_sketch

API_VERSION = 1


@dataclass
class ApiState:
    index: CorpusIndex
    grammar: SketchGrammar
    annotations: list[RelationAnnotation]
    table: SketchTable
    relation_names: dict[str, str]


def build_state(
    index: CorpusIndex,
    grammar: SketchGrammar,
    annotations: list[RelationAnnotation],
) -> ApiState:
    relation_names = {rel.forward: rel.inverse for rel in grammar.relations}
    table = aggregate(annotations, index, relation_names)
    return ApiState(index, grammar, annotations, table, relation_names)


class QueryBody(BaseModel):
    cql: str
    window: int = 8
    limit: int = 50
    offset: int = 0


def _kwic_json(line: KwicLine) -> dict:
    return {
        "sentence_id": line.sentence_id,
        "left": list(line.left),
        "node": list(line.node),
        "right": list(line.right),
        "node_start": line.node_start,
        "highlights": list(line.highlights),
    }


def create_app(state: ApiState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="kpsketch", version=str(API_VERSION))

    @app.get("/api/meta")
    def meta() -> dict:
        idx = state.index
        return {
            "version": API_VERSION,
            "tokens": idx.n_tokens,
            "sentences": idx.n_sentences,
            "docs": idx.n_docs,
            "grammar": {"name": state.grammar.name, "version": state.grammar.version,
                        "rules": state.grammar.rule_count()},
            "annotations": len(state.annotations),
        }

    @app.get("/api/relations")
    def relations() -> dict:
        return {
            "version": API_VERSION,
            "relations": [
                {"forward": rel.forward, "inverse": rel.inverse,
                 "family": rel.family, "rules": len(rel.rules)}
                for rel in state.grammar.relations
            ],
        }

    @app.get("/api/sketch")
    def sketch(
        lemma: str = Query(...),
        relation: str | None = None,
        min_freq: int = 1,
        limit: int | None = None,
    ) -> dict:
        known = {rel.forward for rel in state.grammar.relations}
        known |= {rel.inverse for rel in state.grammar.relations}
        if relation is not None and relation not in known:
            raise HTTPException(status_code=404, detail=f"unknown relation {relation!r}")
        payload = word_sketch(state.table, lemma, relation, min_freq, limit)
        return {"version": API_VERSION, **payload}

    @app.get("/api/kwic")
    def kwic_endpoint(
        head: str = Query(...),
        collocate: str = Query(...),
        relation: str | None = None,
        window: int = 8,
        offset: int = 0,
        limit: int = 50,
    ) -> dict:
        lines = krc_for_pair(
            state.annotations, state.index, head, collocate, relation,
            window, state.relation_names,
        )
        page = lines[offset : offset + limit]
        return {
            "version": API_VERSION,
            "total": len(lines),
            "offset": offset,
            "limit": limit,
            "lines": [_kwic_json(l) for l in page],
        }

    @app.post("/api/query")
    def query(body: QueryBody) -> dict:
        try:
            ast = parse_query(body.cql, default_attribute=state.grammar.default_attribute)
            rule = compile_rule(ast, CompileOptions(sketch=False), rule_id="adhoc")
        except (QueryError, CompileError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        matches = find_matches(rule, state.index)
        page = matches[body.offset : body.offset + body.limit]
        return {
            "version": API_VERSION,
            "total": len(matches),
            "offset": body.offset,
            "limit": body.limit,
            "lines": [_kwic_json(kwic(state.index, m, body.window)) for m in page],
        }

    @app.exception_handler(HTTPException)
    async def http_error(_request, exc: HTTPException):
        return JSONResponse(
            status_code=exc.status_code,
            content={"version": API_VERSION, "error": exc.detail},
        )

    if static_dir is not None and Path(static_dir).is_dir():
        static_path = Path(static_dir)
        assets_path = (static_path / "assets").resolve()

        @app.get("/")
        def root_page() -> FileResponse:
            return FileResponse(static_path / "index.html")

        @app.get("/assets/{name}")
        def asset(name: str) -> FileResponse:
            target = (assets_path / name).resolve()
            if not str(target).startswith(str(assets_path)) or not target.is_file():
                raise HTTPException(status_code=404, detail="not found")
            return FileResponse(target)

    return app


def serve(state: ApiState, host: str = "127.0.0.1", port: int = 8765,
          static_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(state, static_dir), host=host, port=port, log_level="warning")
