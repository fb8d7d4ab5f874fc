import gzip
import io

import numpy as np
import pytest

from kpsketch.corpus import (
    NIL,
    CorpusError,
    CorpusIndex,
    IngestError,
    ingest_vertical,
    lemma_freq,
    open_vertical,
    subcorpus_view,
    to_vertical,
)

ONE_SENTENCE = """<s>
Stony-iron\tstony-iron\tJJ
meteorites\tmeteorite\tNNS
are\tbe\tVBP
classified\tclassify\tVVN
into\tinto\tIN
pallasites\tpallasite\tNNS
and\tand\tCC
mesosiderites\tmesosiderite\tNNS
.\t.\tSENT
</s>
"""

TWO_DOCS = """<doc id="a" genre="report" year="2005">
<s>
wind\twind\tNN
erosion\terosion\tNN
</s>
</doc>
<doc id="b" genre="thesis">
<s>
wave\twave\tNN
action\taction\tNN
</s>
</doc>
"""


def test_ingest_one_sentence():
    index = ingest_vertical(ONE_SENTENCE)
    assert index.n_tokens == 9
    assert index.n_sentences == 1
    assert index.lemma_freq("meteorite") == 1
    assert index.token(1).word == "meteorites"
    assert index.token(1).tag == "NNS"


def test_ingest_empty_input():
    index = ingest_vertical("")
    assert index.n_tokens == 0
    assert index.n_sentences == 0
    assert index.n_docs == 0


def test_doc_metadata_transcribed():
    index = ingest_vertical(TWO_DOCS)
    assert index.docs[0].doc_id == "a"
    assert index.docs[0].metadata == {"genre": "report", "year": "2005"}


def test_lemma_freq_with_coarse_pos(table2_index):
    assert table2_index.lemma_freq("meteorite") == 1
    assert table2_index.lemma_freq("be", "V") == 3
    one = ingest_vertical(ONE_SENTENCE)
    assert one.lemma_freq("be", "V") == 1
    assert one.lemma_freq("zzz") == 0


def test_lemma_freq_sums_to_token_count(table2_index):
    total = sum(table2_index.lemma_freq(l) for l in set(table2_index.lemma_vocab))
    assert total == table2_index.n_tokens


def test_postings_length_equals_freq(table2_index):
    for lemma in set(table2_index.lemma_vocab):
        assert len(table2_index.postings("lemma", lemma)) == table2_index.lemma_freq(lemma)


def test_tokens_outside_s_get_synthetic_sentence():
    index = ingest_vertical("alpha\talpha\tNN\nbeta\tbeta\tNN\n")
    assert index.n_sentences == 1
    assert index.n_docs == 1


def test_sentences_partition_tokens(table2_index):
    cursor = 0
    for sid in range(table2_index.n_sentences):
        span = table2_index.sentence(sid)
        assert span.start == cursor
        assert span.start < span.end
        cursor = span.end
    assert cursor == table2_index.n_tokens


def test_missing_fields_filled_with_nil():
    index = ingest_vertical("alpha\talpha\n")
    assert index.token(0).tag == NIL
    assert any(NIL in w for w in index.warnings)


def test_too_many_fields_is_error():
    with pytest.raises(IngestError, match="line 1"):
        ingest_vertical("a\tb\tc\td\n")


def test_malformed_structural_line_is_error():
    with pytest.raises(IngestError, match="line 1"):
        ingest_vertical('<doc genre=unquoted>\n')


def test_unclosed_sentence_warns():
    index = ingest_vertical("<s>\nalpha\talpha\tNN\n")
    assert index.n_sentences == 1
    assert any("unclosed <s>" in w for w in index.warnings)


def test_paragraph_markup_ignored_with_warning():
    index = ingest_vertical("<p>\nalpha\talpha\tNN\n</p>\n")
    assert index.n_tokens == 1
    assert any("<p>" in w for w in index.warnings)


def test_tag_whitespace_normalized():
    index = ingest_vertical("alpha\talpha\tN P\n")
    assert index.token(0).tag == "N_P"
    assert not any(ch.isspace() for ch in index.token(0).tag)


def test_duplicate_doc_id_is_error():
    with pytest.raises(IngestError, match="duplicate"):
        ingest_vertical('<doc id="a">\n</doc>\n<doc id="a">\n</doc>\n')


def test_round_trip_serialization(table2_index):
    text = to_vertical(table2_index)
    again = ingest_vertical(text)
    assert again.n_tokens == table2_index.n_tokens
    assert again.n_sentences == table2_index.n_sentences
    assert to_vertical(again) == text
    for pos in range(table2_index.n_tokens):
        assert again.token(pos) == table2_index.token(pos)


def test_round_trip_preserves_metadata():
    index = ingest_vertical(TWO_DOCS)
    again = ingest_vertical(to_vertical(index))
    assert [d.metadata for d in again.docs] == [d.metadata for d in index.docs]


def test_gzip_input(tmp_path):
    path = tmp_path / "c.vert.gz"
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        fh.write(ONE_SENTENCE)
    with open_vertical(path) as fh:
        index = ingest_vertical(fh)
    assert index.n_tokens == 9


def test_save_load_round_trip(tmp_path, table2_index):
    d = tmp_path / "idx"
    table2_index.save(d)
    loaded = CorpusIndex.load(d)
    assert loaded.n_tokens == table2_index.n_tokens
    assert loaded.n_sentences == table2_index.n_sentences
    assert loaded.lemma_freq("meteorite") == 1
    assert (d / "manifest.json").exists()


def test_load_rejects_version_mismatch(tmp_path, table2_index):
    import json

    d = tmp_path / "idx"
    table2_index.save(d)
    manifest = json.loads((d / "manifest.json").read_text())
    manifest["format_version"] = 999
    (d / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(CorpusError, match="format version"):
        CorpusIndex.load(d)


def test_subcorpus_by_metadata():
    index = ingest_vertical(TWO_DOCS)
    view = subcorpus_view(index, {"genre": "report"})
    assert list(view.sentence_ids()) == [0]
    assert view.lemma_freq("wind") == 1
    assert view.lemma_freq("wave") == 0


def test_subcorpus_all_sentences_behaves_like_index(table2_index):
    view = subcorpus_view(table2_index, range(table2_index.n_sentences))
    assert view.n_sentences == table2_index.n_sentences
    for lemma in ("meteorite", "reef", "be"):
        assert view.lemma_freq(lemma) == table2_index.lemma_freq(lemma)


def test_subcorpus_unknown_ids_error(table2_index):
    with pytest.raises(CorpusError, match="17"):
        subcorpus_view(table2_index, [0, 17])


def test_lemma_freq_function_accepts_views(table2_index):
    view = subcorpus_view(table2_index, [0])
    assert lemma_freq(table2_index, "meteorite") == 1
    assert lemma_freq(view, "reef") == 0
