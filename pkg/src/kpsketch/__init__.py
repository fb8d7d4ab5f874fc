"""kpsketch: knowledge-pattern corpus queries and semantic word sketches."""

from .corpus import (
    CorpusIndex,
    DocRecord,
    SentenceSpan,
    SubcorpusView,
    Token,
    ingest_vertical,
    lemma_freq,
    open_vertical,
    subcorpus_view,
    to_vertical,
)
from .cql import CompileOptions, CompiledRule, RuleAst, compile_rule, parse_query
from .grammar import RelationDef, SketchGrammar, builtin_essg, lint_grammar, load_grammar
from .matcher import KwicLine, Match, RelationAnnotation, find_matches, kwic, run_grammar
from .sketches import SketchRow, SketchTable, aggregate, krc_for_pair, logdice, word_sketch
from .evaluation import (
    EvalReport,
    EvalSample,
    negative_filter,
    pair_concordances,
    rank_node_forms,
    sample_concordances,
    score_precision,
    score_recall,
)

__version__ = "0.1.0"
