#!/usr/bin/env python3
"""Record real API responses into frontend/tests/fixtures.json.

The browser UI tests replay these payloads through a mocked fetch, so they
exercise the exact bodies the fixture server produces.  Re-run after any
change to the API schemas or the fixture corpora.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from fastapi.testclient import TestClient

from kpsketch import builtin_essg, ingest_vertical, run_grammar
from kpsketch.api import build_state, create_app

from test_evaluation import build_recall_corpus  # noqa: E402


def main() -> None:
    table2 = ingest_vertical((ROOT / "tests/data/table2.vert").read_text())
    grammar = builtin_essg("v1")
    state = build_state(table2, grammar, run_grammar(grammar, table2))
    http = TestClient(create_app(state))

    recall_index, _gold = build_recall_corpus()
    v2 = builtin_essg("v2")
    recall_state = build_state(recall_index, v2, run_grammar(v2, recall_index))
    recall_http = TestClient(create_app(recall_state))

    fixtures = {
        "relations": http.get("/api/relations").json(),
        "meta": http.get("/api/meta").json(),
        "sketch_meteorite": http.get("/api/sketch", params={"lemma": "meteorite"}).json(),
        "sketch_unknown": http.get("/api/sketch", params={"lemma": "zzz"}).json(),
        "kwic_meteorite_pallasite": http.get("/api/kwic", params={
            "head": "meteorite", "collocate": "pallasite",
            "relation": "is the generic of", "window": 5,
        }).json(),
        "query_adjective_meteorite": http.post("/api/query", json={
            "cql": '[tag="JJ.*"] [lemma="meteorite"]',
        }).json(),
        "kwic_wind_wave_page0": recall_http.get("/api/kwic", params={
            "head": "wind", "collocate": "wave", "relation": "causes",
            "window": 5, "offset": 0, "limit": 1,
        }).json(),
        "kwic_wind_wave_page1": recall_http.get("/api/kwic", params={
            "head": "wind", "collocate": "wave", "relation": "causes",
            "window": 5, "offset": 1, "limit": 1,
        }).json(),
    }
    out = ROOT / "frontend/tests/fixtures.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixtures, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
