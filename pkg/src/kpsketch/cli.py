"""Command-line entry point: ingest, query, annotate, sketch, eval, lint, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import CorpusIndex, ingest_vertical, open_vertical, subcorpus_view
from .cql import CompileOptions, QueryError, CompileError, compile_rule, parse_query
from .evaluation import (
    EvalError,
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
from .grammar import GrammarError, SketchGrammar, builtin_essg, load_grammar
from .matcher import (
    annotations_from_jsonl,
    annotations_to_jsonl,
    find_matches,
    kwic,
    kwic_to_tsv,
    run_grammar,
)
from .sketches import aggregate, krc_for_pair, sketch_to_json, sketch_to_text, word_sketch


def _load_grammar_arg(spec: str) -> SketchGrammar:
    if spec in ("v1", "v2"):
        return builtin_essg(spec)
    return load_grammar(Path(spec).read_text(encoding="utf-8"))


def _load_annotations(path: str):
    return annotations_from_jsonl(Path(path).read_text(encoding="utf-8"))


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kpsketch",
        description="Knowledge-pattern corpus queries and semantic word sketches.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="compile a vertical file into a binary index")
    sp.add_argument("vert", help="input .vert file (.gz accepted)")
    sp.add_argument("-o", "--output", required=True, help="index directory to write")

    sp = sub.add_parser("query", help="run a one-off query and print concordances")
    sp.add_argument("index")
    sp.add_argument("-e", "--expression", required=True)
    sp.add_argument("--window", type=int, default=8)
    sp.add_argument("--limit", type=int, default=50)
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("annotate", help="run a sketch grammar and dump annotations")
    sp.add_argument("index")
    sp.add_argument("-g", "--grammar", required=True, help="grammar file, or builtin v1/v2")
    sp.add_argument("-o", "--output", required=True, help="JSONL output path")
    sp.add_argument("--timings", action="store_true", help="print per-rule timings")

    sp = sub.add_parser("sketch", help="print a word sketch for a headword")
    sp.add_argument("index")
    sp.add_argument("-a", "--annotations", required=True)
    sp.add_argument("-g", "--grammar", default="v2")
    sp.add_argument("-l", "--lemma", required=True)
    sp.add_argument("--relation")
    sp.add_argument("--min-freq", type=int, default=1)
    sp.add_argument("--limit", type=int)
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("kwic", help="concordances for one sketch cell")
    sp.add_argument("index")
    sp.add_argument("-a", "--annotations", required=True)
    sp.add_argument("-g", "--grammar", default="v2")
    sp.add_argument("--head", required=True)
    sp.add_argument("--collocate", required=True)
    sp.add_argument("--relation")
    sp.add_argument("--window", type=int, default=8)
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("lint", help="print grammar diagnostics")
    sp.add_argument("grammar")
    sp.add_argument("--json", action="store_true")

    ev = sub.add_parser("eval", help="precision/recall protocol steps")
    evsub = ev.add_subparsers(dest="eval_command", required=True)

    sp = evsub.add_parser("rank", help="rank annotated terms or pairs by frequency")
    sp.add_argument("-a", "--annotations", required=True)
    sp.add_argument("--by", choices=("term", "pair"), default="term")
    sp.add_argument("--limit", type=int, default=30)
    sp.add_argument("--json", action="store_true")

    sp = evsub.add_parser("sample", help="draw a seeded random concordance sample")
    sp.add_argument("index")
    sp.add_argument("-a", "--annotations", required=True)
    sp.add_argument("--term", help="keep annotations whose head or collocate is this lemma")
    sp.add_argument("--family", help="keep annotations of this relation family")
    sp.add_argument("-g", "--grammar", default="v2")
    sp.add_argument("-n", "--size", type=int, default=1000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--window", type=int, default=8)
    sp.add_argument("-o", "--output", required=True, help="sample JSON path")
    sp.add_argument("--verdicts", help="also write an empty verdict TSV here")

    sp = evsub.add_parser("score", help="score a judged precision sample")
    sp.add_argument("--sample", required=True)
    sp.add_argument("--verdicts", required=True)
    sp.add_argument("-o", "--output", help="report JSON path (default: stdout)")

    sp = evsub.add_parser("pair", help="sentence-confined pair concordances")
    sp.add_argument("index")
    sp.add_argument("--lemma1", required=True)
    sp.add_argument("--lemma2", required=True)
    sp.add_argument("--window", type=int, default=15)
    sp.add_argument("--json", action="store_true")

    sp = evsub.add_parser("recall-filter", help="list gold sentences a grammar misses")
    sp.add_argument("index")
    sp.add_argument("-g", "--grammar", required=True)
    sp.add_argument("--lemma1", required=True)
    sp.add_argument("--lemma2", required=True)
    sp.add_argument("--family", required=True)
    sp.add_argument("--gold", required=True,
                    help="file with one gold sentence id per line")
    sp.add_argument("-o", "--output", help="report JSON path (default: stdout)")

    sp = sub.add_parser("serve", help="serve the HTTP API (and UI if built)")
    sp.add_argument("index")
    sp.add_argument("-a", "--annotations", required=True)
    sp.add_argument("-g", "--grammar", default="v2")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8765)
    sp.add_argument("--static", help="directory with the built browser UI")

    return p


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (QueryError, CompileError, GrammarError, EvalError,
            corpus_mod.IngestError, corpus_mod.CorpusError, OSError) as exc:
        print(f"kpsketch: error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "ingest":
        with open_vertical(args.vert) as fh:
            index = ingest_vertical(fh)
        index.save(args.output)
        for w in index.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(f"{index.n_tokens} tokens, {index.n_sentences} sentences, "
              f"{index.n_docs} docs -> {args.output}")
        return 0

    if args.command == "query":
        index = CorpusIndex.load(args.index)
        ast = parse_query(args.expression, default_attribute="tag")
        rule = compile_rule(ast, CompileOptions(sketch=False), rule_id="adhoc")
        matches = find_matches(rule, index)[: args.limit]
        lines = [kwic(index, m, args.window) for m in matches]
        if args.json:
            print(json.dumps([
                {"sentence_id": l.sentence_id, "left": list(l.left),
                 "node": list(l.node), "right": list(l.right)}
                for l in lines
            ], ensure_ascii=False, indent=2))
        else:
            sys.stdout.write(kwic_to_tsv(lines))
        return 0

    if args.command == "annotate":
        index = CorpusIndex.load(args.index)
        grammar = _load_grammar_arg(args.grammar)
        timings: dict[str, float] = {}
        annotations = run_grammar(grammar, index, timings if args.timings else None)
        Path(args.output).write_text(annotations_to_jsonl(annotations), encoding="utf-8")
        if args.timings:
            for rule_id, secs in sorted(timings.items(), key=lambda kv: -kv[1]):
                print(f"{secs * 1000:9.1f} ms  {rule_id}", file=sys.stderr)
        print(f"{len(annotations)} annotations -> {args.output}")
        return 0

    if args.command == "sketch":
        index = CorpusIndex.load(args.index)
        grammar = _load_grammar_arg(args.grammar)
        annotations = _load_annotations(args.annotations)
        names = {rel.forward: rel.inverse for rel in grammar.relations}
        table = aggregate(annotations, index, names)
        payload = word_sketch(table, args.lemma, args.relation, args.min_freq, args.limit)
        print(sketch_to_json(payload) if args.json else sketch_to_text(payload), end="")
        return 0

    if args.command == "kwic":
        index = CorpusIndex.load(args.index)
        grammar = _load_grammar_arg(args.grammar)
        annotations = _load_annotations(args.annotations)
        names = {rel.forward: rel.inverse for rel in grammar.relations}
        lines = krc_for_pair(annotations, index, args.head, args.collocate,
                             args.relation, args.window, names)
        if args.json:
            print(json.dumps([
                {"sentence_id": l.sentence_id, "left": list(l.left),
                 "node": list(l.node), "right": list(l.right),
                 "highlights": list(l.highlights)}
                for l in lines
            ], ensure_ascii=False, indent=2))
        else:
            sys.stdout.write(kwic_to_tsv(lines))
        return 0

    if args.command == "lint":
        grammar = _load_grammar_arg(args.grammar)
        if args.json:
            print(json.dumps([
                {"category": d.category, "relation": d.relation, "rule": d.rule_id,
                 "message": d.message, "cause_code": d.cause_code}
                for d in grammar.lints
            ], ensure_ascii=False, indent=2))
        else:
            for d in grammar.lints:
                print(f"{d.category} [{d.cause_code}] {d.relation} / {d.rule_id}: {d.message}")
            print(f"{len(grammar.lints)} diagnostic(s) in {grammar.name} {grammar.version}")
        return 0

    if args.command == "eval":
        return _dispatch_eval(args)

    if args.command == "serve":
        from .api import build_state, serve as serve_api

        index = CorpusIndex.load(args.index)
        grammar = _load_grammar_arg(args.grammar)
        annotations = _load_annotations(args.annotations)
        state = build_state(index, grammar, annotations)
        print(f"serving on http://{args.host}:{args.port}")
        serve_api(state, args.host, args.port, args.static)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _dispatch_eval(args: argparse.Namespace) -> int:
    if args.eval_command == "rank":
        annotations = _load_annotations(args.annotations)
        ranked = rank_node_forms(annotations, by=args.by)[: args.limit]
        if args.json:
            print(json.dumps([{"key": k, "count": n} for k, n in ranked],
                             ensure_ascii=False, indent=2))
        else:
            for key, n in ranked:
                label = key if isinstance(key, str) else " / ".join(key)
                print(f"{n:8d}  {label}")
        return 0

    if args.eval_command == "sample":
        index = CorpusIndex.load(args.index)
        annotations = _load_annotations(args.annotations)
        selector: dict = {}
        if args.family:
            grammar = _load_grammar_arg(args.grammar)
            family_rel = {rel.forward for rel in grammar.relations
                          if rel.family == args.family}
            annotations = [a for a in annotations if a.relation in family_rel]
            selector["family"] = args.family
        if args.term:
            annotations = [a for a in annotations
                           if args.term in (a.head, a.collocate)]
            selector["term"] = args.term
        sample = sample_concordances(
            annotations, args.size, args.seed, index,
            mode="precision", selector=selector, window=args.window,
            sample_id=Path(args.output).stem,
        )
        Path(args.output).write_text(sample_to_json(sample), encoding="utf-8")
        if args.verdicts:
            Path(args.verdicts).write_text(verdicts_to_tsv(sample), encoding="utf-8")
        print(f"{len(sample.items)} items -> {args.output}")
        return 0

    if args.eval_command == "score":
        sample = sample_from_json(Path(args.sample).read_text(encoding="utf-8"))
        sample = apply_verdicts(sample, Path(args.verdicts).read_text(encoding="utf-8"))
        report = score_precision(sample)
        out = report_to_json(report)
        if args.output:
            Path(args.output).write_text(out, encoding="utf-8")
        print(out)
        print(f"precision {report.metric:.3f} "
              f"({report.counts['TP']} TP / {report.counts['FP']} FP)", file=sys.stderr)
        return 0

    if args.eval_command == "pair":
        index = CorpusIndex.load(args.index)
        lines = pair_concordances(index, args.lemma1, args.lemma2, args.window)
        if args.json:
            print(json.dumps([
                {"sentence_id": l.sentence_id, "left": list(l.left),
                 "node": list(l.node), "right": list(l.right),
                 "highlights": list(l.highlights)}
                for l in lines
            ], ensure_ascii=False, indent=2))
        else:
            sys.stdout.write(kwic_to_tsv(lines))
        return 0

    if args.eval_command == "recall-filter":
        index = CorpusIndex.load(args.index)
        grammar = _load_grammar_arg(args.grammar)
        gold_ids = [int(line) for line in Path(args.gold).read_text().split()]
        gold_view = subcorpus_view(index, gold_ids)
        false_negatives, matched = negative_filter(
            gold_view, grammar, args.lemma1, args.lemma2, args.family
        )
        report = score_recall(len(gold_ids), len(matched),
                              grammar_version=grammar.version)
        payload = json.loads(report_to_json(report))
        payload["false_negatives"] = false_negatives
        out = json.dumps(payload, ensure_ascii=False, indent=2)
        if args.output:
            Path(args.output).write_text(out, encoding="utf-8")
        print(out)
        return 0

    raise AssertionError(f"unhandled eval command {args.eval_command}")


if __name__ == "__main__":
    sys.exit(main())
