"""Vertical-corpus ingestion and the immutable token index.

A vertical file carries one token per line as TAB-separated ``word  lemma
tag`` columns, interleaved with XML-ish structural markup: ``<doc ...>`` /
``</doc>`` for documents (attributes become document metadata) and ``<s>`` /
``</s>`` for sentences.  Ingestion produces a :class:`CorpusIndex`, a
columnar, read-only store with per-lemma frequency tables and postings used
by the matcher for query seeding.
"""

from __future__ import annotations

import gzip
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

NIL = "__NIL__"
INDEX_FORMAT_VERSION = 1

_STRUCT_OPEN = re.compile(r"<(?P<name>[A-Za-z_][\w.-]*)(?P<attrs>(?:\s+[^<>]*?)?)\s*/?>$")
_STRUCT_CLOSE = re.compile(r"</(?P<name>[A-Za-z_][\w.-]*)\s*>$")
_ATTR = re.compile(r'\s*([A-Za-z_][\w.-]*)\s*=\s*"([^"]*)"')


class IngestError(ValueError):
    """Raised on unrecoverable problems in a vertical input stream."""


class CorpusError(ValueError):
    """Raised on invalid use of a built index (bad ids, version mismatch...)."""


@dataclass(frozen=True)
class Token:
    word: str
    lemma: str
    tag: str


@dataclass(frozen=True)
class SentenceSpan:
    start: int  # first token index, inclusive
    end: int    # past-the-end token index
    doc_id: str


@dataclass(frozen=True)
class DocRecord:
    doc_id: str
    metadata: Mapping[str, str]


class _Vocab:
    """Interned string table: stable int ids, insertion-ordered."""

    def __init__(self) -> None:
        self.strings: list[str] = []
        self._ids: dict[str, int] = {}

    def add(self, s: str) -> int:
        i = self._ids.get(s)
        if i is None:
            i = len(self.strings)
            self.strings.append(s)
            self._ids[s] = i
        return i

    def get(self, s: str) -> int | None:
        return self._ids.get(s)

    def __len__(self) -> int:
        return len(self.strings)


def _parse_attrs(raw: str, lineno: int) -> dict[str, str]:
    attrs: dict[str, str] = {}
    pos = 0
    raw = raw.rstrip()
    while pos < len(raw):
        m = _ATTR.match(raw, pos)
        if not m:
            raise IngestError(f"line {lineno}: malformed structural attributes: {raw[pos:]!r}")
        attrs[m.group(1).lower()] = m.group(2)
        pos = m.end()
    return attrs


class CorpusIndex:
    """Columnar token store over one corpus; immutable once built.

    Token attributes are interned per column, so every distinct string is
    regex-tested at most once no matter how often it occurs.  Postings map
    each word/lemma id to its ascending token positions.
    """

    def __init__(
        self,
        word_ids: np.ndarray,
        lemma_ids: np.ndarray,
        tag_ids: np.ndarray,
        word_vocab: list[str],
        lemma_vocab: list[str],
        tag_vocab: list[str],
        sent_bounds: np.ndarray,   # shape (n_sents, 2)
        sent_doc: np.ndarray,      # doc index per sentence
        docs: list[DocRecord],
        warnings: tuple[str, ...] = (),
    ) -> None:
        self.word_ids = word_ids
        self.lemma_ids = lemma_ids
        self.tag_ids = tag_ids
        self.word_vocab = word_vocab
        self.lemma_vocab = lemma_vocab
        self.tag_vocab = tag_vocab
        self.sent_bounds = sent_bounds
        self.sent_doc = sent_doc
        self.docs = docs
        self.warnings = warnings
        self._word_lookup = {s: i for i, s in enumerate(word_vocab)}
        self._lemma_lookup = {s: i for i, s in enumerate(lemma_vocab)}
        self._tag_lookup = {s: i for i, s in enumerate(tag_vocab)}
        self._postings: dict[tuple[str, int], np.ndarray] = {}
        self._build_postings()
        self._lemma_tag_counts = self._build_lemma_tag_counts()
        self._match_cache: dict[tuple[str, str], np.ndarray] = {}

    # -- construction ------------------------------------------------------

    def _build_postings(self) -> None:
        for attr, ids in (("word", self.word_ids), ("lemma", self.lemma_ids)):
            if len(ids) == 0:
                continue
            order = np.argsort(ids, kind="stable")
            sorted_ids = ids[order]
            # boundaries of equal-id runs
            cuts = np.flatnonzero(np.diff(sorted_ids)) + 1
            starts = np.concatenate(([0], cuts))
            ends = np.concatenate((cuts, [len(ids)]))
            for s, e in zip(starts, ends):
                self._postings[(attr, int(sorted_ids[s]))] = np.sort(order[s:e])

    def _build_lemma_tag_counts(self) -> dict[int, dict[int, int]]:
        out: dict[int, dict[int, int]] = {}
        if len(self.lemma_ids) == 0:
            return out
        combo = self.lemma_ids.astype(np.int64) * len(self.tag_vocab) + self.tag_ids
        uniq, counts = np.unique(combo, return_counts=True)
        ntags = len(self.tag_vocab)
        for c, n in zip(uniq, counts):
            out.setdefault(int(c // ntags), {})[int(c % ntags)] = int(n)
        return out

    # -- basic shape -------------------------------------------------------

    @property
    def n_tokens(self) -> int:
        return len(self.word_ids)

    @property
    def n_sentences(self) -> int:
        return len(self.sent_bounds)

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    def token(self, pos: int) -> Token:
        if not 0 <= pos < self.n_tokens:
            raise CorpusError(f"token position {pos} out of range")
        return Token(
            self.word_vocab[self.word_ids[pos]],
            self.lemma_vocab[self.lemma_ids[pos]],
            self.tag_vocab[self.tag_ids[pos]],
        )

    def sentence(self, sid: int) -> SentenceSpan:
        if not 0 <= sid < self.n_sentences:
            raise CorpusError(f"sentence id {sid} out of range")
        s, e = self.sent_bounds[sid]
        return SentenceSpan(int(s), int(e), self.docs[self.sent_doc[sid]].doc_id)

    def sentence_of(self, pos: int) -> int:
        sid = int(np.searchsorted(self.sent_bounds[:, 0], pos, side="right")) - 1
        if sid < 0 or pos >= self.sent_bounds[sid, 1]:
            raise CorpusError(f"token position {pos} not inside any sentence")
        return sid

    def sentence_ids(self) -> np.ndarray:
        return np.arange(self.n_sentences, dtype=np.int64)

    @property
    def index(self) -> "CorpusIndex":
        return self

    # -- frequencies and postings ------------------------------------------

    def lemma_freq(self, lemma: str, coarse_pos: str | None = None) -> int:
        lid = self._lemma_lookup.get(lemma)
        if lid is None:
            return 0
        counts = self._lemma_tag_counts.get(lid, {})
        if coarse_pos is None:
            return sum(counts.values())
        return sum(n for tid, n in counts.items() if self.tag_vocab[tid].startswith(coarse_pos))

    def postings(self, attr: str, value: str) -> np.ndarray:
        lookup = self._word_lookup if attr == "word" else self._lemma_lookup
        if attr not in ("word", "lemma"):
            raise CorpusError(f"no postings for attribute {attr!r}")
        vid = lookup.get(value)
        if vid is None:
            return np.empty(0, dtype=np.int64)
        return self._postings.get((attr, vid), np.empty(0, dtype=np.int64))

    def attr_ids(self, attr: str) -> np.ndarray:
        return {"word": self.word_ids, "lemma": self.lemma_ids, "tag": self.tag_ids}[attr]

    def attr_vocab(self, attr: str) -> list[str]:
        return {"word": self.word_vocab, "lemma": self.lemma_vocab, "tag": self.tag_vocab}[attr]

    def match_vector(self, attr: str, pattern: str) -> np.ndarray:
        """Full-match boolean vector of ``pattern`` over an attribute vocab.

        Cached: patterns are evaluated once per distinct vocabulary string.
        """
        key = (attr, pattern)
        vec = self._match_cache.get(key)
        if vec is None:
            rx = re.compile(pattern)
            vocab = self.attr_vocab(attr)
            vec = np.fromiter(
                (rx.fullmatch(s) is not None for s in vocab), dtype=bool, count=len(vocab)
            )
            self._match_cache[key] = vec
        return vec

    # -- persistence ---------------------------------------------------------

    def save(self, dirpath: str | Path) -> None:
        d = Path(dirpath)
        d.mkdir(parents=True, exist_ok=True)
        np.save(d / "word_ids.npy", self.word_ids)
        np.save(d / "lemma_ids.npy", self.lemma_ids)
        np.save(d / "tag_ids.npy", self.tag_ids)
        np.save(d / "sent_bounds.npy", self.sent_bounds)
        np.save(d / "sent_doc.npy", self.sent_doc)
        vocabs = {
            "word": self.word_vocab,
            "lemma": self.lemma_vocab,
            "tag": self.tag_vocab,
        }
        (d / "vocab.json").write_text(json.dumps(vocabs, ensure_ascii=False))
        docs = [{"doc_id": r.doc_id, "metadata": dict(r.metadata)} for r in self.docs]
        (d / "docs.json").write_text(json.dumps(docs, ensure_ascii=False))
        manifest = {
            "format_version": INDEX_FORMAT_VERSION,
            "tokens": self.n_tokens,
            "sentences": self.n_sentences,
            "docs": self.n_docs,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, dirpath: str | Path) -> "CorpusIndex":
        d = Path(dirpath)
        manifest = json.loads((d / "manifest.json").read_text())
        version = manifest.get("format_version")
        if version != INDEX_FORMAT_VERSION:
            raise CorpusError(
                f"index format version {version!r} does not match "
                f"supported version {INDEX_FORMAT_VERSION}"
            )
        vocabs = json.loads((d / "vocab.json").read_text())
        docs = [
            DocRecord(r["doc_id"], dict(r["metadata"]))
            for r in json.loads((d / "docs.json").read_text())
        ]
        idx = cls(
            np.load(d / "word_ids.npy"),
            np.load(d / "lemma_ids.npy"),
            np.load(d / "tag_ids.npy"),
            vocabs["word"],
            vocabs["lemma"],
            vocabs["tag"],
            np.load(d / "sent_bounds.npy"),
            np.load(d / "sent_doc.npy"),
            docs,
        )
        for key, expected in (("tokens", idx.n_tokens), ("sentences", idx.n_sentences), ("docs", idx.n_docs)):
            if manifest.get(key) != expected:
                raise CorpusError(f"manifest {key} count {manifest.get(key)} != stored {expected}")
        return idx


class SubcorpusView:
    """Read-only selection of sentences over a base index.

    Interchangeable with :class:`CorpusIndex` wherever a corpus view is
    accepted: exposes the same ``index`` / ``sentence_ids`` / ``lemma_freq``
    surface, with frequencies computed over the included sentences only.
    """

    def __init__(self, base: CorpusIndex, sentence_ids: Iterable[int]) -> None:
        ids = np.unique(np.asarray(list(sentence_ids), dtype=np.int64))
        bad = ids[(ids < 0) | (ids >= base.n_sentences)]
        if len(bad):
            raise CorpusError(f"unknown sentence ids: {', '.join(str(int(b)) for b in bad)}")
        self._base = base
        self._ids = ids
        self._lemma_tag_counts: dict[int, dict[int, int]] | None = None

    @property
    def index(self) -> CorpusIndex:
        return self._base

    def sentence_ids(self) -> np.ndarray:
        return self._ids

    @property
    def n_sentences(self) -> int:
        return len(self._ids)

    def _counts(self) -> dict[int, dict[int, int]]:
        if self._lemma_tag_counts is None:
            counts: dict[int, dict[int, int]] = {}
            base = self._base
            for sid in self._ids:
                s, e = base.sent_bounds[sid]
                for lid, tid in zip(base.lemma_ids[s:e], base.tag_ids[s:e]):
                    per = counts.setdefault(int(lid), {})
                    per[int(tid)] = per.get(int(tid), 0) + 1
            self._lemma_tag_counts = counts
        return self._lemma_tag_counts

    def lemma_freq(self, lemma: str, coarse_pos: str | None = None) -> int:
        lid = self._base._lemma_lookup.get(lemma)
        if lid is None:
            return 0
        counts = self._counts().get(lid, {})
        if coarse_pos is None:
            return sum(counts.values())
        return sum(
            n for tid, n in counts.items()
            if self._base.tag_vocab[tid].startswith(coarse_pos)
        )


CorpusView = CorpusIndex | SubcorpusView


def as_view(obj: CorpusView) -> CorpusView:
    if isinstance(obj, (CorpusIndex, SubcorpusView)):
        return obj
    raise CorpusError(f"not a corpus view: {type(obj).__name__}")


def subcorpus_view(
    index: CorpusIndex,
    selector: Mapping[str, str] | Iterable[int],
) -> SubcorpusView:
    """Select sentences by document-metadata equality or by explicit ids."""
    if isinstance(selector, Mapping):
        wanted: list[int] = []
        for di, doc in enumerate(index.docs):
            if all(doc.metadata.get(k) == v for k, v in selector.items()):
                wanted.append(di)
        mask = np.isin(index.sent_doc, np.asarray(wanted, dtype=index.sent_doc.dtype))
        return SubcorpusView(index, np.flatnonzero(mask))
    return SubcorpusView(index, selector)


def lemma_freq(view: CorpusView, lemma: str, coarse_pos: str | None = None) -> int:
    return view.lemma_freq(lemma, coarse_pos)


# -- ingestion ---------------------------------------------------------------


class _Builder:
    def __init__(self) -> None:
        self.word_vocab = _Vocab()
        self.lemma_vocab = _Vocab()
        self.tag_vocab = _Vocab()
        self.word_ids: list[int] = []
        self.lemma_ids: list[int] = []
        self.tag_ids: list[int] = []
        self.sent_bounds: list[tuple[int, int]] = []
        self.sent_doc: list[int] = []
        self.docs: list[DocRecord] = []
        self.doc_ids_seen: set[str] = set()
        self.warnings: list[str] = []
        self.cur_doc: int | None = None
        self.sent_start: int | None = None
        self.sent_explicit = False
        self.nil_fills = 0
        self.ignored_tags: dict[str, int] = {}

    def ensure_doc(self) -> int:
        if self.cur_doc is None:
            self.open_doc({}, auto=True)
        return self.cur_doc  # type: ignore[return-value]

    def open_doc(self, attrs: dict[str, str], auto: bool = False) -> None:
        doc_id = attrs.pop("id", None) or f"doc{len(self.docs) + 1:04d}"
        if doc_id in self.doc_ids_seen:
            raise IngestError(f"duplicate document id {doc_id!r}")
        self.doc_ids_seen.add(doc_id)
        self.docs.append(DocRecord(doc_id, dict(attrs)))
        self.cur_doc = len(self.docs) - 1
        if auto:
            self.warnings.append(f"tokens before any <doc>: synthetic document {doc_id!r} created")

    def close_sentence(self) -> None:
        if self.sent_start is None:
            return
        end = len(self.word_ids)
        if end > self.sent_start:
            self.sent_bounds.append((self.sent_start, end))
            self.sent_doc.append(self.ensure_doc())
        else:
            self.warnings.append("empty sentence dropped")
        self.sent_start = None
        self.sent_explicit = False

    def token(self, fields: list[str], lineno: int) -> None:
        if len(fields) > 3:
            raise IngestError(f"line {lineno}: token line has {len(fields)} fields, expected at most 3")
        while len(fields) < 3:
            fields.append("")
        word, lemma, tag = (f if f != "" else NIL for f in fields)
        if NIL in (word, lemma, tag) or len([f for f in fields if f]) < 3:
            self.nil_fills += 1
        if any(ch.isspace() for ch in tag):
            tag = "_".join(tag.split())
            self.warnings.append(f"line {lineno}: whitespace inside POS tag replaced with '_'")
        if self.sent_start is None:
            self.ensure_doc()
            self.sent_start = len(self.word_ids)
            self.sent_explicit = False
        self.word_ids.append(self.word_vocab.add(word))
        self.lemma_ids.append(self.lemma_vocab.add(lemma))
        self.tag_ids.append(self.tag_vocab.add(tag))

    def finish(self) -> CorpusIndex:
        if self.sent_start is not None and self.sent_explicit:
            self.warnings.append("unclosed <s> closed at end of input")
        self.close_sentence()
        if self.nil_fills:
            self.warnings.append(f"{self.nil_fills} missing token field(s) filled with {NIL}")
        for name, n in sorted(self.ignored_tags.items()):
            self.warnings.append(f"ignored {n} <{name}> structural line(s)")
        return CorpusIndex(
            np.asarray(self.word_ids, dtype=np.int32),
            np.asarray(self.lemma_ids, dtype=np.int32),
            np.asarray(self.tag_ids, dtype=np.int32),
            self.word_vocab.strings,
            self.lemma_vocab.strings,
            self.tag_vocab.strings,
            np.asarray(self.sent_bounds, dtype=np.int64).reshape(-1, 2),
            np.asarray(self.sent_doc, dtype=np.int32),
            self.docs,
            tuple(self.warnings),
        )


def ingest_vertical(source: str | io.TextIOBase | Iterable[str]) -> CorpusIndex:
    """Build a :class:`CorpusIndex` from vertical text.

    ``source`` may be a string, an open text stream, or any iterable of
    lines.  Token lines outside ``<s>`` markup are wrapped into synthetic
    sentences, one per contiguous run.  Structural problems the builder can
    repair are recorded on ``CorpusIndex.warnings``.
    """
    if isinstance(source, str):
        lines: Iterator[str] = iter(source.splitlines())
    else:
        lines = iter(source)
    b = _Builder()
    open_doc_explicit = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("</"):
            m = _STRUCT_CLOSE.match(stripped)
            if not m:
                raise IngestError(f"line {lineno}: malformed structural line: {stripped!r}")
            name = m.group("name").lower()
            if name == "s":
                if b.sent_start is None:
                    b.warnings.append(f"line {lineno}: </s> without open sentence ignored")
                else:
                    b.close_sentence()
            elif name == "doc":
                b.close_sentence()
                if b.cur_doc is None:
                    b.warnings.append(f"line {lineno}: </doc> without open document ignored")
                b.cur_doc = None
                open_doc_explicit = False
            else:
                b.ignored_tags[name] = b.ignored_tags.get(name, 0) + 1
            continue
        if stripped.startswith("<") and stripped.endswith(">") and not stripped.startswith("<\t"):
            m = _STRUCT_OPEN.match(stripped)
            if not m:
                raise IngestError(f"line {lineno}: malformed structural line: {stripped!r}")
            name = m.group("name").lower()
            if name == "s":
                if b.sent_start is not None:
                    if b.sent_explicit:
                        b.warnings.append(f"line {lineno}: <s> before previous sentence closed")
                    b.close_sentence()
                b.ensure_doc()
                b.sent_start = len(b.word_ids)
                b.sent_explicit = True
            elif name == "doc":
                if b.sent_start is not None:
                    if b.sent_explicit:
                        b.warnings.append(f"line {lineno}: <doc> before previous sentence closed")
                    b.close_sentence()
                if open_doc_explicit:
                    b.warnings.append(f"line {lineno}: <doc> before previous document closed")
                b.open_doc(_parse_attrs(m.group("attrs"), lineno))
                open_doc_explicit = True
            else:
                b.ignored_tags[name] = b.ignored_tags.get(name, 0) + 1
            continue
        b.token(line.split("\t"), lineno)
    if open_doc_explicit:
        b.warnings.append("unclosed <doc> closed at end of input")
    return b.finish()


def open_vertical(path: str | Path) -> io.TextIOBase:
    """Open a ``.vert`` file; transparently decompresses ``.gz``."""
    p = Path(path)
    if p.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(p, "rb"), encoding="utf-8")
    return open(p, encoding="utf-8")


def to_vertical(index: CorpusIndex) -> str:
    """Serialize back to vertical text (used for round-trip checks)."""
    out: list[str] = []
    open_doc: int | None = None
    for sid in range(index.n_sentences):
        di = int(index.sent_doc[sid])
        if di != open_doc:
            if open_doc is not None:
                out.append("</doc>")
            doc = index.docs[di]
            attrs = "".join(f' {k}="{v}"' for k, v in doc.metadata.items())
            out.append(f'<doc id="{doc.doc_id}"{attrs}>')
            open_doc = di
        out.append("<s>")
        s, e = index.sent_bounds[sid]
        for pos in range(int(s), int(e)):
            t = index.token(pos)
            out.append(f"{t.word}\t{t.lemma}\t{t.tag}")
        out.append("</s>")
    if open_doc is not None:
        out.append("</doc>")
    return "\n".join(out) + ("\n" if out else "")
