"""Parser and compiler for the bracketed token-query language.

The supported subset covers sketch-grammar rules: sequences of per-token
attribute tests with regex values, ``&``/``|`` boolean combinations inside
brackets, groups, quantifiers (``?`` ``*`` ``+`` ``{m,n}``) and numbered
capture labels.  A bare quoted string outside brackets desugars to a test on
the configured default attribute, so ``"N.*"`` with default ``tag`` is the
same as ``[tag="N.*"]``.

Attribute regexes use full-string match semantics: ``tag="N.*"`` accepts
``NNS`` but not a hypothetical ``XN``.  ``!=`` is the exact complement of
``=`` for the same pattern.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

ATTRIBUTES = ("word", "lemma", "tag")
DEFAULT_MAX_REPEAT = 15


class QueryError(ValueError):
    """Syntax error in a query, with character offset and expectations."""

    def __init__(self, message: str, text: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        self.line = text.count("\n", 0, offset) + 1
        last_nl = text.rfind("\n", 0, offset)
        self.column = offset - last_nl  # 1-based
        detail = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at line {self.line}, column {self.column}, offset {offset}{detail}")


class CompileError(ValueError):
    """Semantic error while compiling a parsed rule."""


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class AttrTest:
    attr: str
    op: str  # "=" or "!="
    pattern: str
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class BoolOp:
    kind: str  # "and" | "or"
    items: tuple["TestExpr", ...]


TestExpr = Union[AttrTest, BoolOp]


@dataclass(frozen=True)
class Quant:
    lo: int
    hi: int | None  # None = unbounded


@dataclass(frozen=True)
class Position:
    test: TestExpr
    label: int | None = None
    quant: Quant | None = None


@dataclass(frozen=True)
class Group:
    elements: tuple["Element", ...]
    label: int | None = None
    quant: Quant | None = None


Element = Union[Position, Group]


@dataclass(frozen=True)
class RuleAst:
    elements: tuple[Element, ...]
    source: str = field(default="", compare=False)

    def labels(self) -> set[int]:
        found: set[int] = set()

        def walk(el: Element) -> None:
            if el.label is not None:
                found.add(el.label)
            if isinstance(el, Group):
                for sub in el.elements:
                    walk(sub)

        for el in self.elements:
            walk(el)
        return found


# -- lexer ---------------------------------------------------------------------

_PUNCT = {
    "[": "LBRACKET", "]": "RBRACKET", "(": "LPAREN", ")": "RPAREN",
    "&": "AMP", "|": "PIPE", "?": "QMARK", "*": "STAR", "+": "PLUS",
}


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    offset: int


def _lex(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _PUNCT:
            toks.append(_Tok(_PUNCT[c], c, i))
            i += 1
            continue
        if c == '"':
            j = i + 1
            out: list[str] = []
            while j < n:
                ch = text[j]
                if ch == "\\" and j + 1 < n:
                    nxt = text[j + 1]
                    if nxt == '"':
                        out.append('"')
                    else:
                        # leave other escapes intact for the regex engine
                        out.append("\\" + nxt)
                    j += 2
                    continue
                if ch == '"':
                    break
                out.append(ch)
                j += 1
            if j >= n:
                raise QueryError("unterminated quoted pattern", text, i, ('"',))
            toks.append(_Tok("QUOTED", "".join(out), i))
            i = j + 1
            continue
        if c == "{":
            m = re.match(r"\{(\d+),(\d+)\}", text[i:])
            if not m:
                raise QueryError("malformed repetition bound", text, i, ("{m,n}",))
            toks.append(_Tok("BRACE", m.group(0), i))
            i += m.end()
            continue
        if c == "!":
            if text[i : i + 2] == "!=":
                toks.append(_Tok("NEQ", "!=", i))
                i += 2
                continue
            raise QueryError("stray '!'", text, i, ("!=",))
        if c == "=":
            toks.append(_Tok("EQ", "=", i))
            i += 1
            continue
        m = re.match(r"\d+:", text[i:])
        if m:
            toks.append(_Tok("LABEL", m.group(0)[:-1], i))
            i += m.end()
            continue
        m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", text[i:])
        if m:
            toks.append(_Tok("IDENT", m.group(0), i))
            i += m.end()
            continue
        raise QueryError(f"unexpected character {c!r}", text, i)
    toks.append(_Tok("EOF", "", n))
    return toks


# -- parser ---------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, default_attribute: str):
        if default_attribute not in ATTRIBUTES:
            raise CompileError(f"default attribute must be one of {ATTRIBUTES}, got {default_attribute!r}")
        self.text = text
        self.toks = _lex(text)
        self.pos = 0
        self.default_attribute = default_attribute
        self.seen_labels: set[int] = set()

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def take(self, kind: str, expected: tuple[str, ...]) -> _Tok:
        tok = self.toks[self.pos]
        if tok.kind != kind:
            raise QueryError(f"unexpected {tok.kind or 'end of input'}", self.text, tok.offset, expected)
        self.pos += 1
        return tok

    def parse(self) -> RuleAst:
        elements = self.sequence(stop=("EOF",))
        self.take("EOF", ("end of query",))
        if not elements:
            raise QueryError("empty query", self.text, 0, ("position pattern",))
        return RuleAst(tuple(elements), source=self.text)

    def sequence(self, stop: tuple[str, ...]) -> list[Element]:
        elements: list[Element] = []
        while self.peek().kind not in stop:
            elements.append(self.element())
        return elements

    def element(self) -> Element:
        tok = self.peek()
        label: int | None = None
        if tok.kind == "LABEL":
            self.pos += 1
            label = int(tok.value)
            if label < 1:
                raise QueryError("labels must be positive integers", self.text, tok.offset)
            if label in self.seen_labels:
                raise QueryError(f"duplicate label {label}", self.text, tok.offset)
            self.seen_labels.add(label)
            tok = self.peek()
        if tok.kind == "QUOTED":
            self.pos += 1
            base: Element = Position(AttrTest(self.default_attribute, "=", tok.value, offset=tok.offset))
        elif tok.kind == "LBRACKET":
            base = self.bracket()
        elif tok.kind == "LPAREN":
            self.pos += 1
            inner = self.sequence(stop=("RPAREN", "EOF"))
            self.take("RPAREN", (")",))
            if not inner:
                raise QueryError("empty group", self.text, tok.offset, ("position pattern",))
            base = Group(tuple(inner))
        elif label is not None:
            raise QueryError("label not followed by a pattern", self.text, tok.offset,
                             ('"regex"', "[", "("))
        elif tok.kind in ("QMARK", "STAR", "PLUS", "BRACE"):
            raise QueryError("quantifier with nothing to repeat", self.text, tok.offset,
                             ('"regex"', "[", "("))
        else:
            raise QueryError(f"unexpected {tok.kind}", self.text, tok.offset,
                             ('"regex"', "[", "("))
        quant = self.maybe_quant()
        if label is not None:
            base = replace(base, label=label)
        if quant is not None:
            base = replace(base, quant=quant)
        return base

    def maybe_quant(self) -> Quant | None:
        tok = self.peek()
        if tok.kind == "QMARK":
            self.pos += 1
            return Quant(0, 1)
        if tok.kind == "STAR":
            self.pos += 1
            return Quant(0, None)
        if tok.kind == "PLUS":
            self.pos += 1
            return Quant(1, None)
        if tok.kind == "BRACE":
            self.pos += 1
            lo, hi = (int(x) for x in tok.value[1:-1].split(","))
            if lo > hi:
                raise QueryError(f"repetition bound {{{lo},{hi}}} has lo > hi", self.text, tok.offset)
            return Quant(lo, hi)
        return None

    def bracket(self) -> Position:
        open_tok = self.take("LBRACKET", ("[",))
        if self.peek().kind == "RBRACKET":
            raise QueryError("empty bracket", self.text, self.peek().offset,
                             ("attribute test",))
        test = self.bool_or()
        self.take("RBRACKET", ("]", "&", "|"))
        return Position(test)

    def bool_or(self) -> TestExpr:
        items = [self.bool_and()]
        while self.peek().kind == "PIPE":
            self.pos += 1
            items.append(self.bool_and())
        if len(items) == 1:
            return items[0]
        return BoolOp("or", tuple(items))

    def bool_and(self) -> TestExpr:
        items = [self.bool_term()]
        while self.peek().kind == "AMP":
            self.pos += 1
            items.append(self.bool_term())
        if len(items) == 1:
            return items[0]
        return BoolOp("and", tuple(items))

    def bool_term(self) -> TestExpr:
        tok = self.peek()
        if tok.kind == "LPAREN":
            self.pos += 1
            inner = self.bool_or()
            self.take("RPAREN", (")",))
            return inner
        ident = self.take("IDENT", ("attribute name",))
        if ident.value not in ATTRIBUTES:
            raise QueryError(f"unknown attribute {ident.value!r}", self.text, ident.offset,
                             ATTRIBUTES)
        op_tok = self.peek()
        if op_tok.kind == "EQ":
            op = "="
        elif op_tok.kind == "NEQ":
            op = "!="
        else:
            raise QueryError("missing comparison operator", self.text, op_tok.offset, ("=", "!="))
        self.pos += 1
        pat = self.take("QUOTED", ("quoted regex",))
        return AttrTest(ident.value, op, pat.value, offset=pat.offset)


def parse_query(text: str, default_attribute: str = "tag") -> RuleAst:
    """Parse one query/rule into an AST."""
    return _Parser(text, default_attribute).parse()


# -- printing and JSON dumps ------------------------------------------------------


def _quote(pattern: str) -> str:
    return '"' + pattern.replace('"', '\\"') + '"'


def _test_to_text(t: TestExpr, parenthesize: bool = False) -> str:
    if isinstance(t, AttrTest):
        return f"{t.attr}{t.op}{_quote(t.pattern)}"
    sep = " & " if t.kind == "and" else " | "
    inner = sep.join(
        _test_to_text(i, parenthesize=isinstance(i, BoolOp) and i.kind != t.kind)
        for i in t.items
    )
    return f"({inner})" if parenthesize else inner


def _quant_to_text(q: Quant | None) -> str:
    if q is None:
        return ""
    if q == Quant(0, 1):
        return "?"
    if q == Quant(0, None):
        return "*"
    if q == Quant(1, None):
        return "+"
    return f"{{{q.lo},{q.hi}}}"


def _element_to_text(el: Element) -> str:
    prefix = f"{el.label}:" if el.label is not None else ""
    if isinstance(el, Position):
        body = f"[{_test_to_text(el.test)}]"
    else:
        body = "(" + " ".join(_element_to_text(e) for e in el.elements) + ")"
    return prefix + body + _quant_to_text(el.quant)


def ast_to_text(ast: RuleAst) -> str:
    """Print an AST back to query syntax; re-parsing yields an equal AST."""
    return " ".join(_element_to_text(el) for el in ast.elements)


def _test_to_json(t: TestExpr) -> dict:
    if isinstance(t, AttrTest):
        return {"kind": "test", "attr": t.attr, "op": t.op, "pattern": t.pattern}
    return {"kind": t.kind, "items": [_test_to_json(i) for i in t.items]}


def _element_to_json(el: Element) -> dict:
    quant = [el.quant.lo, el.quant.hi] if el.quant else None
    if isinstance(el, Position):
        return {"kind": "position", "label": el.label, "quant": quant,
                "tests": _test_to_json(el.test)}
    return {"kind": "group", "label": el.label, "quant": quant,
            "elements": [_element_to_json(e) for e in el.elements]}


def ast_to_json(ast: RuleAst) -> str:
    return json.dumps({"kind": "rule", "elements": [_element_to_json(e) for e in ast.elements]},
                      indent=2)


# -- string-level test evaluation (used by the linter and debugging) ----------------


def eval_test(t: TestExpr, word: str, lemma: str, tag: str) -> bool:
    if isinstance(t, AttrTest):
        value = {"word": word, "lemma": lemma, "tag": tag}[t.attr]
        hit = re.fullmatch(t.pattern, value) is not None
        return hit if t.op == "=" else not hit
    if t.kind == "and":
        return all(eval_test(i, word, lemma, tag) for i in t.items)
    return any(eval_test(i, word, lemma, tag) for i in t.items)


# -- posting-query extraction for index seeding ---------------------------------


def seed_queries(t: TestExpr) -> frozenset[tuple[str, str]] | None:
    """(attr, pattern) posting queries that cover every way ``t`` can match.

    A token satisfying ``t`` must match at least one of the returned
    word/lemma patterns, so the union of their postings is a safe sentence
    pre-filter.  Returns None when the test cannot be covered (negations,
    tag-only tests: the index has no tag postings).
    """
    if isinstance(t, AttrTest):
        if t.op != "=" or t.attr == "tag":
            return None
        return frozenset({(t.attr, t.pattern)})
    if t.kind == "and":
        options = [seed_queries(i) for i in t.items]
        viable = [o for o in options if o is not None]
        if not viable:
            return None
        return min(viable, key=len)
    covers: set[tuple[str, str]] = set()
    for item in t.items:
        sub = seed_queries(item)
        if sub is None:
            return None
        covers |= sub
    return frozenset(covers)


# -- compilation ------------------------------------------------------------------


@dataclass(frozen=True)
class CompileOptions:
    max_repeat: int = DEFAULT_MAX_REPEAT
    sketch: bool = True  # require capture labels 1 and 2


@dataclass(frozen=True)
class Pred:
    """A deduplicated position predicate with a canonical key."""

    test: TestExpr
    key: str

    def matches(self, word: str, lemma: str, tag: str) -> bool:
        return eval_test(self.test, word, lemma, tag)


@dataclass
class Nfa:
    n_states: int
    start: int
    accept: int
    # consuming transitions per source state: (pred_index, dest, trans_id);
    # all edges (consuming and epsilon) lead to strictly higher state numbers
    dtrans: list[list[tuple[int, int, int]]]
    eps: list[list[int]]
    closure_mask: list[int]
    label_trans: dict[int, int]  # label -> trans_id
    trans_info: dict[int, tuple[int, int, int]]  # trans_id -> (src, pred_index, dest)


class _NfaBuilder:
    def __init__(self) -> None:
        self.eps: list[list[int]] = []
        self.dtrans: list[list[tuple[int, int, int]]] = []
        self.preds: list[Pred] = []
        self._pred_ids: dict[str, int] = {}
        self.label_trans: dict[int, int] = {}
        self.trans_info: dict[int, tuple[int, int, int]] = {}
        self._next_trans = 0

    def state(self) -> int:
        self.eps.append([])
        self.dtrans.append([])
        return len(self.eps) - 1

    def add_eps(self, a: int, b: int) -> None:
        self.eps[a].append(b)

    def pred_index(self, test: TestExpr) -> int:
        key = _test_to_text(test)
        idx = self._pred_ids.get(key)
        if idx is None:
            idx = len(self.preds)
            self.preds.append(Pred(test, key))
            self._pred_ids[key] = idx
        return idx

    def add_trans(self, a: int, test: TestExpr, b: int, label: int | None) -> None:
        tid = self._next_trans
        self._next_trans += 1
        pi = self.pred_index(test)
        self.dtrans[a].append((pi, b, tid))
        self.trans_info[tid] = (a, pi, b)
        if label is not None:
            self.label_trans[label] = tid


def _validate_regexes(ast: RuleAst) -> None:
    def walk_test(t: TestExpr) -> None:
        if isinstance(t, AttrTest):
            try:
                re.compile(t.pattern)
            except re.error as exc:
                raise CompileError(
                    f"invalid regex in test {t.attr}{t.op}\"{t.pattern}\": {exc}"
                ) from exc
        else:
            for i in t.items:
                walk_test(i)

    def walk(el: Element) -> None:
        if isinstance(el, Position):
            walk_test(el.test)
        else:
            for sub in el.elements:
                walk(sub)

    for el in ast.elements:
        walk(el)


def _validate_labels(ast: RuleAst, sketch: bool) -> None:
    labels = ast.labels()
    if sketch and labels != {1, 2}:
        raise CompileError(
            f"sketch rules must label capture slots 1 and 2 exactly once each, found {sorted(labels) or 'none'}"
        )

    def walk(el: Element, repeatable: bool, optional: bool) -> None:
        here_rep = repeatable or (el.quant is not None and (el.quant.hi is None or el.quant.hi > 1))
        here_opt = optional or (el.quant is not None and el.quant.lo == 0)
        if el.label is not None:
            if isinstance(el, Group):
                raise CompileError(f"label {el.label} placed on a group; labels bind single positions")
            if el.quant is not None:
                raise CompileError(f"label {el.label} placed on a quantified element")
            if repeatable:
                raise CompileError(f"label {el.label} inside a repeatable group")
            if optional:
                raise CompileError(f"label {el.label} inside an optional group")
        if isinstance(el, Group):
            for sub in el.elements:
                walk(sub, here_rep, here_opt)

    for el in ast.elements:
        walk(el, False, False)


@dataclass
class CompiledRule:
    rule_id: str
    source: str
    ast: RuleAst
    nfa: Nfa
    preds: list[Pred]
    # (trans_id, label) pairs in sequence order; empty for unlabeled queries
    label_order: tuple[tuple[int, int], ...]
    seed_options: tuple[frozenset[tuple[str, str]], ...]
    notes: tuple[str, ...]

    @property
    def labels(self) -> set[int]:
        return {lab for _, lab in self.label_order}

    def can_match_empty(self) -> bool:
        return bool(self.nfa.closure_mask[self.nfa.start] >> self.nfa.accept & 1)


def _required_elements(ast: RuleAst) -> Iterator[Position]:
    """Positions that occur on every accepting path (quantifier lo >= 1)."""

    def walk(el: Element) -> Iterator[Position]:
        if el.quant is not None and el.quant.lo == 0:
            return
        if isinstance(el, Position):
            yield el
        else:
            for sub in el.elements:
                yield from walk(sub)

    for el in ast.elements:
        yield from walk(el)


def compile_rule(
    ast: RuleAst,
    options: CompileOptions | None = None,
    rule_id: str = "query",
) -> CompiledRule:
    """Compile an AST into an executable token automaton."""
    options = options or CompileOptions()
    _validate_regexes(ast)
    _validate_labels(ast, options.sketch)

    notes: list[str] = []
    b = _NfaBuilder()

    def emit(el: Element, entry: int) -> int:
        """Wire one occurrence of ``el`` and return its exit state."""
        if isinstance(el, Position):
            out = b.state()
            b.add_trans(entry, el.test, out, el.label)
            return out
        cur = entry
        for sub in el.elements:
            cur = emit_quantified(sub, cur)
        return cur

    def emit_quantified(el: Element, entry: int) -> int:
        q = el.quant
        if q is None:
            return emit(el, entry)
        hi = q.hi
        if hi is None:
            hi = max(options.max_repeat, q.lo)
            notes.append(
                f"unbounded repetition of {_element_to_text(replace(el, quant=None))} capped at {hi}"
            )
        cur = entry
        for _ in range(q.lo):
            cur = emit(el, cur)
        exits = [cur]
        for _ in range(hi - q.lo):
            cur = emit(el, cur)
            exits.append(cur)
        final = exits[-1]
        for st in exits[:-1]:
            b.add_eps(st, final)
        return final

    start = b.state()
    cur = start
    for el in ast.elements:
        cur = emit_quantified(el, cur)
    accept = cur

    n = len(b.eps)
    closure_mask = _epsilon_closures(n, b.eps)
    nfa = Nfa(
        n_states=n,
        start=start,
        accept=accept,
        dtrans=b.dtrans,
        eps=b.eps,
        closure_mask=closure_mask,
        label_trans=dict(b.label_trans),
        trans_info=dict(b.trans_info),
    )

    label_order = tuple(
        sorted(((tid, lab) for lab, tid in b.label_trans.items()), key=lambda p: p[0])
    )

    seeds: list[frozenset[tuple[str, str]]] = []
    for pos in _required_elements(ast):
        queries = seed_queries(pos.test)
        if queries:
            seeds.append(queries)

    return CompiledRule(
        rule_id=rule_id,
        source=ast.source or ast_to_text(ast),
        ast=ast,
        nfa=nfa,
        preds=b.preds,
        label_order=label_order,
        seed_options=tuple(seeds),
        notes=tuple(notes),
    )


def _epsilon_closures(n: int, eps: list[list[int]]) -> list[int]:
    masks = [1 << i for i in range(n)]
    for i in range(n):
        for j in eps[i]:
            masks[i] |= 1 << j
    changed = True
    while changed:
        changed = False
        for i in range(n):
            m = masks[i]
            acc = m
            rest = m
            while rest:
                bit = rest & -rest
                rest ^= bit
                acc |= masks[bit.bit_length() - 1]
            if acc != m:
                masks[i] = acc
                changed = True
    return masks
