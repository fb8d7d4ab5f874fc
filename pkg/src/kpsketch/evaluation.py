"""Precision/recall protocol: ranking, seeded sampling, verdicts, metrics.

The workflow mirrors how sketch-grammar output is audited by hand:

* precision: rank annotated terms, pick one, draw a seeded random sample of
  its concordances, judge each line TP/FP in a sidecar TSV, then score;
* recall: find every sentence where a known term pair co-occurs, mark the
  lines that truly express the relation (the gold set), build a subcorpus
  from them, re-run the grammar there and list what it missed.

Samples and reports are JSON; verdicts live in a human-editable TSV so the
manual judging step round-trips through files.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal

from .corpus import CorpusView, SubcorpusView, as_view
from .grammar import SketchGrammar
from .matcher import KwicLine, RelationAnnotation, kwic, run_grammar

PRNG_NAME = "mt19937"  # python random.Random; stable for a fixed seed
SAMPLE_FORMAT = "kpsketch.sample/1"
REPORT_FORMAT = "kpsketch.report/1"

PRECISION_VERDICTS = ("unjudged", "TP", "FP")
RECALL_VERDICTS = ("unjudged", "positive", "negative")


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EvalItem:
    sentence_id: int
    pos1: int
    pos2: int
    text: str
    verdict: str = "unjudged"
    cause: int | None = None  # false-positive cause code 1..11


@dataclass(frozen=True)
class EvalSample:
    sample_id: str
    mode: Literal["precision", "recall"]
    selector: dict
    seed: int
    prng: str
    items: tuple[EvalItem, ...]


@dataclass(frozen=True)
class EvalReport:
    mode: str
    counts: dict
    metric: float
    grammar_version: str = ""
    seed: int | None = None
    prng: str = PRNG_NAME
    cause_breakdown: dict = field(default_factory=dict)


def rank_node_forms(
    annotations: Iterable[RelationAnnotation],
    by: Literal["term", "pair"] = "term",
) -> list[tuple]:
    """Rank annotated heads (or pairs) by frequency, ties alphabetical."""
    counts: dict = {}
    for a in annotations:
        key = a.head if by == "term" else (a.head, a.collocate)
        counts[key] = counts.get(key, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _render(view: CorpusView, sentence_id: int, pos1: int, pos2: int, window: int) -> str:
    ann = RelationAnnotation("", "", "", pos1, pos2, "", sentence_id)
    line = kwic(view, ann, window)
    return " ".join((*line.left, "<<", *line.node, ">>", *line.right))


def sample_concordances(
    items: Iterable[RelationAnnotation] | Iterable[tuple[int, int, int]],
    n: int,
    seed: int,
    view: CorpusView | None = None,
    mode: Literal["precision", "recall"] = "precision",
    selector: dict | None = None,
    window: int = 8,
    sample_id: str = "sample",
) -> EvalSample:
    """Uniform sample without replacement; reproducible for a fixed seed.

    Items are deduplicated by (sentence_id, pos1, pos2) before sampling.  If
    there are at most ``n`` items, all of them are returned in shuffled
    order.
    """
    if n < 1:
        raise EvalError("sample size must be >= 1")
    keys: dict[tuple[int, int, int], None] = {}
    for it in items:
        if isinstance(it, RelationAnnotation):
            key = (it.sentence_id, it.head_pos, it.collocate_pos)
        else:
            key = (int(it[0]), int(it[1]), int(it[2]))
        keys.setdefault(key, None)
    pool = sorted(keys)
    rng = random.Random(seed)
    rng.shuffle(pool)
    chosen = pool[:n]
    rendered = tuple(
        EvalItem(sid, p1, p2, _render(view, sid, p1, p2, window) if view is not None else "")
        for sid, p1, p2 in chosen
    )
    return EvalSample(
        sample_id=sample_id,
        mode=mode,
        selector=selector or {},
        seed=seed,
        prng=PRNG_NAME,
        items=rendered,
    )


def pair_concordances(
    view: CorpusView,
    lemma1: str,
    lemma2: str,
    window: int = 15,
    context: int = 8,
) -> list[KwicLine]:
    """Sentence-confined co-occurrences of two lemmas within a token span.

    Both orders count; several co-occurrences in one sentence give several
    lines, deduplicated by the unordered position pair.  Symmetric in the
    two lemmas.
    """
    if window < 1:
        raise EvalError("window must be >= 1")
    view = as_view(view)
    index = view.index
    post1 = index.postings("lemma", lemma1)
    post2 = index.postings("lemma", lemma2)
    if len(post1) == 0 or len(post2) == 0:
        return []
    allowed = set(int(s) for s in view.sentence_ids())
    pairs: set[tuple[int, int]] = set()
    by_sent: dict[int, list[int]] = {}
    for p in post2:
        sid = index.sentence_of(int(p))
        if sid in allowed:
            by_sent.setdefault(sid, []).append(int(p))
    for p1 in post1:
        sid = index.sentence_of(int(p1))
        for p2 in by_sent.get(sid, ()):
            if p1 != p2 and abs(int(p1) - p2) <= window:
                pairs.add((min(int(p1), p2), max(int(p1), p2)))
    lines = []
    for lo, hi in sorted(pairs):
        ann = RelationAnnotation("", "", "", lo, hi, "", index.sentence_of(lo))
        lines.append(kwic(view, ann, context))
    return lines


def negative_filter(
    gold_view: SubcorpusView,
    grammar: SketchGrammar,
    lemma1: str,
    lemma2: str,
    family: str,
) -> tuple[list[int], list[int]]:
    """Split gold sentences into (false negatives, matched) under a grammar.

    A gold sentence counts as matched when the grammar annotates the
    unordered pair {lemma1, lemma2} under any relation of the family there.
    """
    gold_ids = [int(s) for s in gold_view.sentence_ids()]
    if not gold_ids:
        raise EvalError("empty gold view; the recall protocol needs marked positives")
    family_relations = {rel.forward for rel in grammar.relations if rel.family == family}
    annotations = run_grammar(grammar, gold_view)
    matched: set[int] = set()
    want = {lemma1, lemma2}
    for a in annotations:
        if a.relation in family_relations and {a.head, a.collocate} == want:
            matched.add(a.sentence_id)
    false_negatives = [sid for sid in gold_ids if sid not in matched]
    return false_negatives, sorted(matched)


def score_precision(sample: EvalSample, grammar_version: str = "") -> EvalReport:
    judged = [it for it in sample.items if it.verdict != "unjudged"]
    unjudged = [i for i, it in enumerate(sample.items) if it.verdict == "unjudged"]
    if unjudged:
        raise EvalError(
            f"cannot score: unjudged items at indexes {', '.join(map(str, unjudged))}"
        )
    if not judged:
        raise EvalError("cannot score: no judged items")
    bad = [it.verdict for it in judged if it.verdict not in PRECISION_VERDICTS]
    if bad:
        raise EvalError(f"unknown precision verdicts: {sorted(set(bad))}")
    tp = sum(1 for it in judged if it.verdict == "TP")
    fp = len(judged) - tp
    causes: dict[str, int] = {}
    for it in judged:
        if it.verdict == "FP" and it.cause is not None:
            causes[str(it.cause)] = causes.get(str(it.cause), 0) + 1
    return EvalReport(
        mode="precision",
        counts={"TP": tp, "FP": fp, "judged": len(judged)},
        metric=tp / len(judged),
        grammar_version=grammar_version,
        seed=sample.seed,
        cause_breakdown=causes,
    )


def score_recall(
    gold_total: int,
    matched: int,
    grammar_version: str = "",
    seed: int | None = None,
) -> EvalReport:
    if gold_total < 1:
        raise EvalError("cannot score recall: gold set is empty")
    if not 0 <= matched <= gold_total:
        raise EvalError(f"matched count {matched} outside [0, {gold_total}]")
    return EvalReport(
        mode="recall",
        counts={"gold_total": gold_total, "matched": matched,
                "missed": gold_total - matched},
        metric=matched / gold_total,
        grammar_version=grammar_version,
        seed=seed,
    )


# -- file formats ---------------------------------------------------------------


def sample_to_json(sample: EvalSample) -> str:
    return json.dumps({
        "format": SAMPLE_FORMAT,
        "sample_id": sample.sample_id,
        "mode": sample.mode,
        "selector": sample.selector,
        "seed": sample.seed,
        "prng": sample.prng,
        "items": [
            {"sentence_id": it.sentence_id, "pos1": it.pos1, "pos2": it.pos2,
             "text": it.text, "verdict": it.verdict, "cause": it.cause}
            for it in sample.items
        ],
    }, ensure_ascii=False, indent=2)


def sample_from_json(text: str) -> EvalSample:
    d = json.loads(text)
    if d.get("format") != SAMPLE_FORMAT:
        raise EvalError(f"unsupported sample format {d.get('format')!r}")
    return EvalSample(
        sample_id=d["sample_id"],
        mode=d["mode"],
        selector=d["selector"],
        seed=d["seed"],
        prng=d["prng"],
        items=tuple(
            EvalItem(it["sentence_id"], it["pos1"], it["pos2"], it["text"],
                     it.get("verdict", "unjudged"), it.get("cause"))
            for it in d["items"]
        ),
    )


def verdicts_to_tsv(sample: EvalSample) -> str:
    """Editable sidecar: sample_id, item index, verdict, optional cause code."""
    rows = ["# sample_id\titem\tverdict\tcause"]
    for i, it in enumerate(sample.items):
        cause = "" if it.cause is None else str(it.cause)
        rows.append(f"{sample.sample_id}\t{i}\t{it.verdict}\t{cause}")
    return "\n".join(rows) + "\n"


def apply_verdicts(sample: EvalSample, tsv: str) -> EvalSample:
    items = list(sample.items)
    for lineno, raw in enumerate(tsv.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise EvalError(f"verdict line {lineno}: expected at least 3 TAB fields")
        sample_id, idx_s, verdict = fields[0], fields[1], fields[2]
        if sample_id != sample.sample_id:
            raise EvalError(
                f"verdict line {lineno}: sample id {sample_id!r} does not match {sample.sample_id!r}"
            )
        try:
            idx = int(idx_s)
            items[idx]
        except (ValueError, IndexError):
            raise EvalError(f"verdict line {lineno}: bad item index {idx_s!r}") from None
        cause = None
        if len(fields) > 3 and fields[3].strip():
            cause = int(fields[3])
            if not 1 <= cause <= 11:
                raise EvalError(f"verdict line {lineno}: cause code {cause} outside 1..11")
        items[idx] = replace(items[idx], verdict=verdict, cause=cause)
    return replace(sample, items=tuple(items))


def report_to_json(report: EvalReport) -> str:
    return json.dumps({
        "format": REPORT_FORMAT,
        "mode": report.mode,
        "counts": report.counts,
        "metric": report.metric,
        "grammar_version": report.grammar_version,
        "seed": report.seed,
        "prng": report.prng,
        "cause_breakdown": report.cause_breakdown,
    }, ensure_ascii=False, indent=2)
