import json

import pytest

from kpsketch.corpus import ingest_vertical, subcorpus_view
from kpsketch.evaluation import (
    EvalError,
    EvalItem,
    EvalSample,
    apply_verdicts,
    negative_filter,
    pair_concordances,
    rank_node_forms,
    report_to_json,
    sample_concordances,
    sample_from_json,
    sample_to_json,
    score_precision,
    score_recall,
    verdicts_to_tsv,
)
from kpsketch.matcher import RelationAnnotation, run_grammar


def _sent(*tokens):
    lines = ["<s>"]
    for token in tokens:
        word, lemma, tag = token.split("/")
        lines.append(f"{word}\t{lemma}\t{tag}")
    lines.append("</s>")
    return "\n".join(lines) + "\n"


# -- ranking -----------------------------------------------------------------------


def test_rank_node_forms_by_term(table2_index, essg_v1):
    annotations = run_grammar(essg_v1, table2_index)
    ranked = rank_node_forms(annotations, by="term")
    assert ranked[0] == ("material", 6)
    assert dict(ranked)["meteorite"] == 2
    assert dict(ranked)["reef"] == 4


def test_rank_node_forms_by_pair(table2_index, essg_v1):
    annotations = run_grammar(essg_v1, table2_index)
    ranked = rank_node_forms(annotations, by="pair")
    assert all(count == 1 for _, count in ranked)
    assert ("meteorite", "pallasite") in dict(ranked)


def test_rank_empty():
    assert rank_node_forms([]) == []


def test_rank_ties_alphabetical():
    anns = [
        RelationAnnotation("r", h, "x", 0, 1, "r", i)
        for i, h in enumerate(["b", "a", "b", "a"])
    ]
    assert rank_node_forms(anns) == [("a", 2), ("b", 2)]


# -- sampling -----------------------------------------------------------------------


def _items(n):
    return [(i, i * 2, i * 2 + 1) for i in range(n)]


def test_sample_exhaustive_when_small():
    sample = sample_concordances(_items(5), 1000, seed=7)
    assert len(sample.items) == 5
    assert {(i.sentence_id, i.pos1, i.pos2) for i in sample.items} == set(_items(5))


def test_sample_deterministic():
    a = sample_concordances(_items(50), 10, seed=42)
    b = sample_concordances(_items(50), 10, seed=42)
    assert a == b


def test_sample_without_replacement():
    sample = sample_concordances(_items(10000), 1000, seed=3)
    keys = [(i.sentence_id, i.pos1, i.pos2) for i in sample.items]
    assert len(keys) == 1000
    assert len(set(keys)) == 1000


def test_sample_deduplicates_input():
    sample = sample_concordances(_items(5) + _items(5), 1000, seed=1)
    assert len(sample.items) == 5


def test_seed_changes_sample():
    distinct = {
        tuple((i.sentence_id, i.pos1, i.pos2) for i in
              sample_concordances(_items(20), 10, seed=s).items)
        for s in range(100)
    }
    assert len(distinct) >= 95


def test_sample_size_validation():
    with pytest.raises(EvalError):
        sample_concordances(_items(5), 0, seed=1)


def test_sample_renders_kwic(table2_index, essg_v1):
    annotations = run_grammar(essg_v1, table2_index)
    sample = sample_concordances(annotations, 3, seed=11, view=table2_index)
    assert all("<<" in it.text and ">>" in it.text for it in sample.items)


# -- pair concordances ----------------------------------------------------------------


def test_pair_concordance_basic():
    index = ingest_vertical(_sent("wind/wind/NN", "drives/drive/VVZ",
                                  "wave/wave/NN", "growth/growth/NN"))
    lines = pair_concordances(index, "wind", "wave", window=15)
    assert len(lines) == 1


def test_pair_concordance_window_bound():
    tokens = ["wind/wind/NN"] + [f"w{i}/w{i}/JJ" for i in range(19)] + ["wave/wave/NN"]
    index = ingest_vertical(_sent(*tokens))
    assert pair_concordances(index, "wind", "wave", window=15) == []
    assert len(pair_concordances(index, "wind", "wave", window=20)) == 1


def test_pair_concordance_sentence_confined():
    index = ingest_vertical(_sent("wind/wind/NN") + _sent("wave/wave/NN"))
    assert pair_concordances(index, "wind", "wave", window=15) == []


def test_pair_concordance_symmetric(table2_index):
    a = pair_concordances(table2_index, "meteorite", "pallasite")
    b = pair_concordances(table2_index, "pallasite", "meteorite")
    assert a == b
    assert len(a) == 1


def test_pair_concordance_multiple_in_sentence():
    index = ingest_vertical(_sent("wind/wind/NN", "and/and/CC", "wind/wind/NN",
                                  "make/make/VVP", "wave/wave/NN"))
    lines = pair_concordances(index, "wind", "wave", window=15)
    assert len(lines) == 2


# -- scoring -----------------------------------------------------------------------


def _judged_sample(tp, fp):
    items = tuple(
        EvalItem(i, 2 * i, 2 * i + 1, "", "TP" if i < tp else "FP")
        for i in range(tp + fp)
    )
    return EvalSample("s", "precision", {}, 1, "mt19937", items)


def test_precision_from_695_tp_305_fp():
    report = score_precision(_judged_sample(695, 305))
    assert report.metric == pytest.approx(0.695)
    assert report.counts == {"TP": 695, "FP": 305, "judged": 1000}


def test_precision_rejects_unjudged():
    sample = _judged_sample(2, 1)
    sample = EvalSample("s", "precision", {}, 1, "mt19937",
                        sample.items + (EvalItem(99, 0, 1, ""),))
    with pytest.raises(EvalError, match="indexes 3"):
        score_precision(sample)


def test_precision_rejects_empty():
    with pytest.raises(EvalError, match="no judged"):
        score_precision(EvalSample("s", "precision", {}, 1, "mt19937", ()))


def test_recall_13_of_20():
    report = score_recall(20, 13)
    assert report.metric == pytest.approx(0.65)
    assert report.counts == {"gold_total": 20, "matched": 13, "missed": 7}


def test_recall_validation():
    with pytest.raises(EvalError):
        score_recall(0, 0)
    with pytest.raises(EvalError):
        score_recall(5, 6)


# -- file round trips ------------------------------------------------------------------


def test_sample_json_round_trip(table2_index, essg_v1):
    annotations = run_grammar(essg_v1, table2_index)
    sample = sample_concordances(annotations, 4, seed=5, view=table2_index,
                                 selector={"term": "material"})
    again = sample_from_json(sample_to_json(sample))
    assert again == sample


def test_verdict_tsv_round_trip():
    sample = sample_concordances(_items(4), 10, seed=2)
    tsv = verdicts_to_tsv(sample)
    edited = []
    for line in tsv.splitlines():
        if line.startswith("#"):
            edited.append(line)
            continue
        sid, idx, _verdict, _cause = line.split("\t")
        edited.append(f"{sid}\t{idx}\tTP\t")
    judged = apply_verdicts(sample, "\n".join(edited))
    assert all(it.verdict == "TP" for it in judged.items)
    assert score_precision(judged).metric == 1.0


def test_verdict_cause_codes():
    sample = sample_concordances(_items(2), 10, seed=2)
    judged = apply_verdicts(sample, "sample\t0\tFP\t7\nsample\t1\tTP\t\n")
    assert judged.items[0].cause == 7
    report = score_precision(judged)
    assert report.cause_breakdown == {"7": 1}


def test_verdict_errors():
    sample = sample_concordances(_items(2), 10, seed=2)
    with pytest.raises(EvalError, match="sample id"):
        apply_verdicts(sample, "other\t0\tTP\t\n")
    with pytest.raises(EvalError, match="item index"):
        apply_verdicts(sample, "sample\t9\tTP\t\n")
    with pytest.raises(EvalError, match="cause code"):
        apply_verdicts(sample, "sample\t0\tFP\t99\n")


def test_report_json():
    report = score_recall(20, 13, grammar_version="v2", seed=9)
    data = json.loads(report_to_json(report))
    assert data["metric"] == pytest.approx(0.65)
    assert data["grammar_version"] == "v2"
    assert data["prng"] == "mt19937"


# -- recall protocol end to end -------------------------------------------------------


def build_recall_corpus():
    """50 sentences; wind and wave co-occur everywhere; gold subset known.

    Group A (ids 0-14): causal patterns both grammar versions know.
    Group B (ids 15-24): causal patterns only the refined grammar knows.
    Group C (ids 25-39): co-occurrence without an explicit causal pattern.
    Group D (ids 40-49): filler around the pair.
    """
    sents = []
    for i in range(15):
        sents.append(_sent("wind/wind/NN", "causes/cause/VVZ",
                           f"big{i}/big/JJ", "waves/wave/NNS"))
    for i in range(5):
        sents.append(_sent("wave/wave/NN", "generation/generation/NN",
                           "by/by/IN", "wind/wind/NN"))
    for i in range(5):
        sents.append(_sent("waves/wave/NNS", "are/be/VBP", "the/the/DT",
                           "product/product/NN", "of/of/IN", "wind/wind/NN"))
    for i in range(15):
        sents.append(_sent("wind/wind/NN", "and/and/CC", "waves/wave/NNS",
                           "are/be/VBP", f"common{i}/common/JJ"))
    for i in range(10):
        sents.append(_sent("wind/wind/NN", "blows/blow/VVZ", "over/over/IN",
                           "waves/wave/NNS", "daily/daily/RB"))
    return ingest_vertical("".join(sents)), list(range(25))


def test_recall_protocol_end_to_end(essg_v1, essg_v2):
    index, gold_ids = build_recall_corpus()
    assert index.n_sentences == 50

    # step: find all pair contexts, then "manually" mark the gold positives
    lines = pair_concordances(index, "wind", "wave", window=15)
    found_sents = {l.sentence_id for l in lines}
    assert found_sents == set(range(50))

    gold_view = subcorpus_view(index, gold_ids)
    fn1, matched1 = negative_filter(gold_view, essg_v1, "wind", "wave", "cause-effect")
    fn2, matched2 = negative_filter(gold_view, essg_v2, "wind", "wave", "cause-effect")

    # complement: missed and matched partition the gold set exactly
    for fn, matched in ((fn1, matched1), (fn2, matched2)):
        assert sorted(fn + matched) == gold_ids
        assert not (set(fn) & set(matched))

    r1 = score_recall(len(gold_ids), len(matched1), grammar_version="v1")
    r2 = score_recall(len(gold_ids), len(matched2), grammar_version="v2")
    assert set(matched1) == set(range(15))
    assert r1.metric == pytest.approx(15 / 25)
    assert r2.metric == 1.0
    assert r2.metric >= r1.metric


def test_negative_filter_rejects_empty_gold(table2_index, essg_v1):
    with pytest.raises(Exception):
        negative_filter(subcorpus_view(table2_index, []), essg_v1,
                        "wind", "wave", "cause-effect")


def test_negative_filter_no_patterns_at_all(essg_v2):
    index = ingest_vertical(
        _sent("wind/wind/NN", "near/near/IN", "waves/wave/NNS")
        + _sent("waves/wave/NNS", "under/under/IN", "wind/wind/NN")
    )
    view = subcorpus_view(index, [0, 1])
    fn, matched = negative_filter(view, essg_v2, "wind", "wave", "cause-effect")
    assert fn == [0, 1] and matched == []
