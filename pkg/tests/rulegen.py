"""Seeded generators for random corpora and restricted random rules.

Rules stay within the oracle-checkable subset: at most 6 top-level elements,
one nesting level, bounded quantifiers (bounds <= 3), labels on mandatory
unquantified positions.
"""

from __future__ import annotations

import random

from kpsketch.corpus import ingest_vertical
from kpsketch.cql import AttrTest, BoolOp, Group, Position, Quant, RuleAst

WORDS = ["alpha", "beta", "gamma", "delta", "kappa", ",", "into", "such"]
LEMMAS = ["al", "be", "ga", "de", ",", "into", "such"]
TAGS = ["NN", "NNS", "VV", "VVZ", "JJ", "RB", "IN", ","]

PATTERNS = {
    "word": ["alpha", "beta|gamma", "a.*", "de.*|kappa", ",", "such|into"],
    "lemma": ["al", "be|ga", "g.*", ",|into", "de"],
    "tag": ["NN", "N.*", "V.*", "JJ|RB", "NN|NNS|JJ", "IN", ","],
}

QUANTS = [None, None, None, Quant(0, 1), Quant(0, 2), Quant(1, 2), Quant(0, 3), Quant(2, 3)]


def random_corpus(rng: random.Random, max_tokens: int = 200):
    n = rng.randint(1, max_tokens)
    lines = []
    open_sent = False
    for i in range(n):
        if not open_sent:
            lines.append("<s>")
            open_sent = True
        lines.append(f"{rng.choice(WORDS)}\t{rng.choice(LEMMAS)}\t{rng.choice(TAGS)}")
        if rng.random() < 0.12:
            lines.append("</s>")
            open_sent = False
    if open_sent:
        lines.append("</s>")
    return ingest_vertical("\n".join(lines) + "\n")


def _random_test(rng: random.Random):
    def atom():
        attr = rng.choice(["word", "lemma", "tag"])
        op = "=" if rng.random() < 0.8 else "!="
        return AttrTest(attr, op, rng.choice(PATTERNS[attr]))

    r = rng.random()
    if r < 0.6:
        return atom()
    if r < 0.85:
        return BoolOp("and", (atom(), atom()))
    return BoolOp("or", (atom(), atom()))


def _random_position(rng: random.Random, allow_quant: bool = True) -> Position:
    quant = rng.choice(QUANTS) if allow_quant else None
    return Position(_random_test(rng), quant=quant)


def random_rule(rng: random.Random, sketch: bool = True) -> RuleAst:
    n = rng.randint(2 if sketch else 1, 6)
    elements: list = []
    for _ in range(n):
        if rng.random() < 0.2:
            inner = tuple(_random_position(rng) for _ in range(rng.randint(1, 2)))
            elements.append(Group(inner, quant=rng.choice(QUANTS)))
        else:
            elements.append(_random_position(rng))
    if sketch:
        # force two mandatory unquantified positions and label them
        slots = [i for i, el in enumerate(elements) if isinstance(el, Position)]
        while len(slots) < 2:
            elements.append(_random_position(rng, allow_quant=False))
            slots = [i for i, el in enumerate(elements) if isinstance(el, Position)]
        picks = rng.sample(slots, 2)
        labels = [1, 2] if rng.random() < 0.7 else [2, 1]
        for idx, label in zip(sorted(picks), labels):
            el = elements[idx]
            elements[idx] = Position(el.test, label=label, quant=None)
    return RuleAst(tuple(elements))
