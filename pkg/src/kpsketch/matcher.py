"""Execute compiled rules over sentences and enumerate capture bindings.

Matching is all-bindings: for every sentence and start position, every
distinct pair of capture positions reachable over any accepting automaton
path is reported, so an enumeration like "X is classified into A, B and C"
yields one pair per enumerated noun.  Duplicate bindings of one rule are
collapsed, keeping the smallest span start and the largest span end seen.
Matches never cross sentence boundaries.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .corpus import CorpusError, CorpusView, SubcorpusView, as_view
from .cql import CompiledRule

if TYPE_CHECKING:  # pragma: no cover
    from .grammar import SketchGrammar


@dataclass(frozen=True, order=True)
class Match:
    rule_id: str
    sentence_id: int
    start: int  # span, token indices into the corpus
    end: int
    pos1: int | None = None  # token bound to capture slot 1
    pos2: int | None = None  # token bound to capture slot 2


@dataclass(frozen=True, order=True)
class RelationAnnotation:
    relation: str        # forward relation name; head is the slot-1 lemma
    head: str
    collocate: str
    head_pos: int
    collocate_pos: int
    rule_id: str
    sentence_id: int


@dataclass(frozen=True)
class KwicLine:
    sentence_id: int
    left: tuple[str, ...]
    node: tuple[str, ...]
    right: tuple[str, ...]
    node_start: int                 # corpus position of node[0]
    highlights: tuple[int, ...]     # corpus positions to emphasize


def _seed_postings(index, option) -> list[np.ndarray]:
    """Token positions satisfying one required-element posting query."""
    parts: list[np.ndarray] = []
    for attr, pattern in option:
        vocab_hits = np.flatnonzero(index.match_vector(attr, pattern))
        for vid in vocab_hits:
            posting = index._postings.get((attr, int(vid)))
            if posting is not None:
                parts.append(posting)
    return parts


def _candidate_sentences(rule: CompiledRule, view: CorpusView) -> np.ndarray:
    """Sentences that can possibly match, via postings on a required element.

    Each seed option covers one mandatory element of the rule; the option
    with the fewest matching token positions prunes best.  Rules with no
    coverable required element scan the whole view.
    """
    index = view.index
    sids = view.sentence_ids()
    best: np.ndarray | None = None
    for option in rule.seed_options:
        parts = _seed_postings(index, option)
        total = sum(len(p) for p in parts)
        if best is None or total < len(best):
            best = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    if best is None:
        return sids
    if len(best) == 0:
        return np.empty(0, dtype=np.int64)
    starts = index.sent_bounds[:, 0]
    hit_sents = np.unique(np.searchsorted(starts, np.sort(best), side="right") - 1)
    if isinstance(view, SubcorpusView):
        return np.intersect1d(hit_sents, sids, assume_unique=True)
    return hit_sents


def _bits(mask: int):
    while mask:
        bit = mask & -mask
        mask ^= bit
        yield bit.bit_length() - 1


class _SentenceRun:
    """Automaton simulation state for one sentence."""

    def __init__(self, rule: CompiledRule, view: CorpusView, sid: int):
        index = view.index
        s, e = index.sent_bounds[sid]
        self.base = int(s)
        self.L = int(e - s)
        self.rule = rule
        self.nfa = rule.nfa
        w = index.word_ids[s:e]
        l = index.lemma_ids[s:e]
        t = index.tag_ids[s:e]
        self.pred_ok = [
            _eval_test_vec(p.test, index, w, l, t) for p in rule.preds
        ]
        self._maxend: list[list[int]] | None = None

    # maxend[p][state]: largest end position of an accepting run from
    # `state` at position p (epsilon moves included), -1 when none exists.
    def maxend_table(self) -> list[list[int]]:
        if self._maxend is not None:
            return self._maxend
        nfa = self.nfa
        n, L = nfa.n_states, self.L
        table = [[-1] * n for _ in range(L + 1)]
        for p in range(L, -1, -1):
            row = table[p]
            nxt = table[p + 1] if p < L else None
            row[nfa.accept] = p
            # edges only reach higher state numbers, so one descending pass
            # settles both epsilon moves and consuming continuations
            for st in range(n - 1, -1, -1):
                best = row[st]
                if nxt is not None:
                    for pi, dst, _tid in nfa.dtrans[st]:
                        if self.pred_ok[pi][p] and nxt[dst] > best:
                            best = nxt[dst]
                for e in nfa.eps[st]:
                    if row[e] > best:
                        best = row[e]
                row[st] = best
        self._maxend = table
        return table

    def maxend_closed(self, state: int, p: int) -> int:
        return self.maxend_table()[p][state]

    def sweep(self, start_mask: int, start_pos: int, blocked: frozenset[int]) -> list[int]:
        """Forward reachability; masks stay epsilon-closed."""
        nfa = self.nfa
        masks = [0] * (self.L + 1)
        masks[start_pos] = start_mask
        for p in range(start_pos, self.L):
            m = masks[p]
            if not m:
                continue
            out = 0
            for st in _bits(m):
                for pi, dst, tid in nfa.dtrans[st]:
                    if tid in blocked:
                        continue
                    if self.pred_ok[pi][p]:
                        out |= nfa.closure_mask[dst]
            masks[p + 1] |= out
        return masks


def _eval_test_vec(test, index, w_ids, l_ids, t_ids) -> np.ndarray:
    from .cql import AttrTest

    if isinstance(test, AttrTest):
        table = index.match_vector(test.attr, test.pattern)
        ids = {"word": w_ids, "lemma": l_ids, "tag": t_ids}[test.attr]
        vec = table[ids]
        return vec if test.op == "=" else ~vec
    vecs = [_eval_test_vec(i, index, w_ids, l_ids, t_ids) for i in test.items]
    out = vecs[0].copy()
    if test.kind == "and":
        for v in vecs[1:]:
            out &= v
    else:
        for v in vecs[1:]:
            out |= v
    return out


def _match_sentence(rule: CompiledRule, view: CorpusView, sid: int) -> list[Match]:
    run = _SentenceRun(rule, view, sid)
    nfa = rule.nfa
    L = run.L
    if L == 0:
        return []

    # viable starts: some consuming transition out of the start closure fires
    init_preds = {pi for st in _bits(nfa.closure_mask[nfa.start])
                  for pi, _dst, _tid in nfa.dtrans[st]}
    start_ok = np.zeros(L, dtype=bool)
    for pi in init_preds:
        start_ok |= run.pred_ok[pi]

    base = run.base
    out: list[Match] = []

    if not rule.label_order:
        seen: dict[tuple[int, int], None] = {}
        for s in range(L):
            if not start_ok[s]:
                continue
            masks = run.sweep(nfa.closure_mask[nfa.start], s, frozenset())
            acc_bit = 1 << nfa.accept
            for p in range(s + 1, L + 1):  # zero-length matches are dropped
                if masks[p] & acc_bit:
                    seen.setdefault((s, p), None)
        for (s, p) in seen:
            out.append(Match(rule.rule_id, sid, base + s, base + p))
        return sorted(out)

    (t_first, lab_first), (t_second, lab_second) = rule.label_order
    src1, pred1, dst1 = nfa.trans_info[t_first]
    src2, pred2, dst2 = nfa.trans_info[t_second]
    blocked_first = frozenset((t_first, t_second))
    blocked_mid = frozenset((t_second,))
    bit_src1 = 1 << src1
    bit_src2 = 1 << src2

    mid_cache: dict[int, list[int]] = {}
    found: dict[tuple[int, int], list[int]] = {}  # (pf, ps) -> [min_start, max_end]

    for s in range(L):
        if not start_ok[s]:
            continue
        masks = run.sweep(nfa.closure_mask[nfa.start], s, blocked_first)
        for pf in range(s, L):
            if not (masks[pf] & bit_src1) or not run.pred_ok[pred1][pf]:
                continue
            mid = mid_cache.get(pf)
            if mid is None:
                mid = run.sweep(nfa.closure_mask[dst1], pf + 1, blocked_mid)
                mid_cache[pf] = mid
            for ps in range(pf + 1, L):
                if not (mid[ps] & bit_src2) or not run.pred_ok[pred2][ps]:
                    continue
                end = run.maxend_closed(dst2, ps + 1)
                if end < 0:
                    continue
                key = (pf, ps)
                prev = found.get(key)
                if prev is None:
                    found[key] = [s, end]
                else:
                    if s < prev[0]:
                        prev[0] = s
                    if end > prev[1]:
                        prev[1] = end

    for (pf, ps), (mstart, mend) in found.items():
        positions = {lab_first: base + pf, lab_second: base + ps}
        out.append(Match(rule.rule_id, sid, base + mstart, base + mend,
                         pos1=positions[1], pos2=positions[2]))
    return sorted(out)


def find_matches(rule: CompiledRule, view: CorpusView) -> list[Match]:
    """All distinct matches of one rule over a corpus view, sorted."""
    view = as_view(view)
    out: list[Match] = []
    for sid in _candidate_sentences(rule, view):
        out.extend(_match_sentence(rule, view, int(sid)))
    return sorted(out)


def _thread_count() -> int:
    raw = os.environ.get("KPSKETCH_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_grammar(
    grammar: "SketchGrammar",
    view: CorpusView,
    timings: dict[str, float] | None = None,
) -> list[RelationAnnotation]:
    """Run every rule of a grammar and emit directed relation annotations.

    Slot 1 is the relation head under the forward name by contract, so each
    match yields exactly one annotation.  The result is deterministic for a
    fixed grammar and view; ``KPSKETCH_THREADS`` may parallelize rule
    execution without affecting the output.
    """
    view = as_view(view)
    index = view.index

    def run_one(args) -> tuple[str, str, list[Match], float]:
        relation, rule = args
        t0 = time.perf_counter()
        matches = find_matches(rule, view)
        return relation, rule.rule_id, matches, time.perf_counter() - t0

    jobs = [(rel.forward, rule) for rel in grammar.relations for rule in rel.rules]
    threads = _thread_count()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, jobs))
    else:
        results = [run_one(j) for j in jobs]

    annotations: set[RelationAnnotation] = set()
    for relation, rule_id, matches, elapsed in results:
        if timings is not None:
            timings[rule_id] = timings.get(rule_id, 0.0) + elapsed
        for m in matches:
            annotations.add(RelationAnnotation(
                relation=relation,
                head=index.lemma_vocab[index.lemma_ids[m.pos1]],
                collocate=index.lemma_vocab[index.lemma_ids[m.pos2]],
                head_pos=m.pos1,
                collocate_pos=m.pos2,
                rule_id=rule_id,
                sentence_id=m.sentence_id,
            ))
    return sorted(annotations)


def kwic(
    view: CorpusView,
    item: Match | RelationAnnotation,
    window: int = 8,
) -> KwicLine:
    """Render one concordance line, clipped to the sentence and window."""
    if window < 0:
        raise ValueError("window must be >= 0")
    view = as_view(view)
    index = view.index
    if isinstance(item, RelationAnnotation):
        sid = item.sentence_id
        lo = min(item.head_pos, item.collocate_pos)
        hi = max(item.head_pos, item.collocate_pos) + 1
        highlights: tuple[int, ...] = tuple(sorted((item.head_pos, item.collocate_pos)))
    else:
        sid = item.sentence_id
        lo, hi = item.start, item.end
        highlights = tuple(p for p in (item.pos1, item.pos2) if p is not None)
    s, e = index.sent_bounds[sid]
    s, e = int(s), int(e)
    if not (s <= lo and hi <= e):
        raise CorpusError(f"positions [{lo},{hi}) outside sentence {sid}")
    left_lo = max(s, lo - window)
    right_hi = min(e, hi + window)
    words = lambda a, b: tuple(index.word_vocab[w] for w in index.word_ids[a:b])
    return KwicLine(
        sentence_id=sid,
        left=words(left_lo, lo),
        node=words(lo, hi),
        right=words(hi, right_hi),
        node_start=lo,
        highlights=highlights,
    )


def annotations_to_jsonl(annotations: Iterable[RelationAnnotation]) -> str:
    import json

    lines = [
        json.dumps({
            "relation": a.relation,
            "head": a.head,
            "collocate": a.collocate,
            "rule_id": a.rule_id,
            "sentence_id": a.sentence_id,
            "pos1": a.head_pos,
            "pos2": a.collocate_pos,
        }, ensure_ascii=False)
        for a in annotations
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def annotations_from_jsonl(text: str) -> list[RelationAnnotation]:
    import json

    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        out.append(RelationAnnotation(
            relation=d["relation"], head=d["head"], collocate=d["collocate"],
            head_pos=d["pos1"], collocate_pos=d["pos2"],
            rule_id=d["rule_id"], sentence_id=d["sentence_id"],
        ))
    return out


def kwic_to_tsv(lines: Sequence[KwicLine]) -> str:
    rows = [
        "\t".join((" ".join(k.left), " ".join(k.node), " ".join(k.right), str(k.sentence_id)))
        for k in lines
    ]
    return "\n".join(rows) + ("\n" if rows else "")
