"""Aggregate relation annotations into per-headword semantic word sketches.

A sketch lists, for each relation name and headword, the collocates found
with pair frequency and a logDice salience score.  Annotations are directed
(slot 1 is the head under the forward relation name); when the forward to
inverse name mapping is supplied, each pair also appears mirrored under the
inverse name so both members of the relation get a sketch entry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .corpus import CorpusView, as_view
from .matcher import KwicLine, RelationAnnotation, kwic

SKETCH_JSON_FORMAT = "kpsketch.sketch/1"
SKETCH_TEXT_FORMAT = "sketch text v1"


class SketchError(ValueError):
    pass


def logdice(f_xy: int, f_x: int, f_y: int) -> float:
    """Salience of a pair: 14 + log2(2*f_xy / (f_x + f_y)); at most 14."""
    if f_xy < 1:
        raise SketchError(f"pair frequency must be >= 1, got {f_xy}")
    if f_x < f_xy or f_y < f_xy:
        raise SketchError(
            f"marginal counts ({f_x}, {f_y}) below pair count {f_xy}; counting is inconsistent"
        )
    return 14.0 + math.log2(2.0 * f_xy / (f_x + f_y))


@dataclass(frozen=True)
class SketchRow:
    collocate: str
    freq: int
    score: float


class SketchTable:
    """(relation name, head lemma) -> scored, sorted collocate rows."""

    def __init__(self, rows: dict[tuple[str, str], list[SketchRow]]):
        self.rows = {
            key: sorted(rs, key=lambda r: (-r.score, -r.freq, r.collocate))
            for key, rs in rows.items()
        }
        self.totals = {key: sum(r.freq for r in rs) for key, rs in self.rows.items()}

    def heads(self) -> list[str]:
        return sorted({head for _, head in self.rows})

    def relations_for(self, head: str) -> list[str]:
        return sorted(rel for rel, h in self.rows if h == head)


def aggregate(
    annotations: Iterable[RelationAnnotation],
    view: CorpusView,
    relation_names: Mapping[str, str] | None = None,
    coarse_pos: str | None = "N",
) -> SketchTable:
    """Count pairs and score them against view lemma frequencies.

    ``relation_names`` maps each forward relation name to its inverse; when
    given, mirrored rows are emitted under the inverse name.  Marginal
    frequencies are noun-filtered by default since every shipped rule binds
    nouns.  A pair of token positions matched by several rules counts once.
    """
    view = as_view(view)
    occurrences: dict[tuple[str, str, str], set[tuple[int, int, int]]] = {}
    for a in annotations:
        occ = (a.sentence_id, a.head_pos, a.collocate_pos)
        occurrences.setdefault((a.relation, a.head, a.collocate), set()).add(occ)
        if relation_names is not None:
            inverse = relation_names.get(a.relation)
            if inverse is not None:
                occurrences.setdefault((inverse, a.collocate, a.head), set()).add(occ)

    freqs: dict[str, int] = {}

    def marginal(lemma: str) -> int:
        n = freqs.get(lemma)
        if n is None:
            n = view.lemma_freq(lemma, coarse_pos)
            if n == 0:
                # fall back to unfiltered count before declaring the view inconsistent
                n = view.lemma_freq(lemma, None)
            freqs[lemma] = n
        return n

    rows: dict[tuple[str, str], list[SketchRow]] = {}
    for (relation, head, collocate), occs in occurrences.items():
        f_xy = len(occs)
        f_x = marginal(head)
        f_y = marginal(collocate)
        if f_x == 0 or f_y == 0:
            missing = head if f_x == 0 else collocate
            raise SketchError(
                f"annotation lemma {missing!r} does not occur in the view; "
                "annotations and view must come from the same corpus"
            )
        rows.setdefault((relation, head), []).append(
            SketchRow(collocate, f_xy, logdice(f_xy, f_x, f_y))
        )
    return SketchTable(rows)


def word_sketch(
    table: SketchTable,
    head: str,
    relation: str | None = None,
    min_freq: int = 1,
    limit: int | None = None,
) -> dict:
    """One headword's sketch: relation blocks with filtered, ordered rows."""
    blocks = []
    for rel in table.relations_for(head):
        if relation is not None and rel != relation:
            continue
        rows = [r for r in table.rows[(rel, head)] if r.freq >= min_freq]
        if limit is not None:
            rows = rows[:limit]
        blocks.append({
            "relation": rel,
            "total": table.totals[(rel, head)],
            "rows": [{"collocate": r.collocate, "freq": r.freq, "score": r.score}
                     for r in rows],
        })
    return {"head": head, "blocks": blocks}


def krc_for_pair(
    annotations: Iterable[RelationAnnotation],
    view: CorpusView,
    head: str,
    collocate: str,
    relation: str | None = None,
    window: int = 8,
    relation_names: Mapping[str, str] | None = None,
) -> list[KwicLine]:
    """Concordance lines for one (head, collocate, relation) sketch cell.

    When ``relation`` is an inverse name from ``relation_names``, the stored
    forward annotations are searched with head and collocate swapped.
    """
    inverse_of = {}
    if relation_names:
        inverse_of = {inv: fwd for fwd, inv in relation_names.items()}
    hits = []
    for a in annotations:
        if a.relation == relation or relation is None:
            if a.head == head and a.collocate == collocate:
                hits.append(a)
        if relation is not None and inverse_of.get(relation) == a.relation:
            if a.head == collocate and a.collocate == head:
                hits.append(a)
    seen: set[tuple[int, int, int]] = set()
    unique = []
    for a in sorted(hits, key=lambda a: (a.sentence_id, min(a.head_pos, a.collocate_pos))):
        key = (a.sentence_id, a.head_pos, a.collocate_pos)
        if key not in seen:
            seen.add(key)
            unique.append(a)
    return [kwic(view, a, window) for a in unique]


def sketch_to_json(sketch: dict) -> str:
    return json.dumps({"format": SKETCH_JSON_FORMAT, **sketch}, ensure_ascii=False, indent=2)


def sketch_to_text(sketch: dict) -> str:
    """Aligned-column rendering: one block per relation, score to 2 decimals."""
    out = [f'word sketch: "{sketch["head"]}"  ({SKETCH_TEXT_FORMAT})']
    if not sketch["blocks"]:
        out.append("  (no relations)")
    for block in sketch["blocks"]:
        out.append("")
        out.append(f'  "{sketch["head"]}" {block["relation"]}...   {block["total"]}')
        width = max((len(r["collocate"]) for r in block["rows"]), default=0)
        for r in block["rows"]:
            out.append(f'    {r["collocate"]:<{width}}  {r["freq"]:>6}  {r["score"]:.2f}')
        if not block["rows"]:
            out.append("    (no rows)")
    return "\n".join(out) + "\n"
