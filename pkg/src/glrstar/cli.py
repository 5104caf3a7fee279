"""Command line: glrstar compile|parse|train|eval|corrupt."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .corpus import confusions_from, corrupt, read_corpus, read_treebank, write_corpus
from .evaluation import EVAL_MODES, evaluate, render_agreement, render_table
from .glr import parse
from .grammar import GrammarError, augment, load_grammar, tokenize
from .quality import DEFAULT_THRESHOLDS, QualityThresholds, classify
from .robust import BeamConfig, parse_robust
from .scoring import DEFAULT_WEIGHTS, FULL, SKIP_ONLY, best_candidates, load_weights
from .stats import DerivationError, derive_action_sequence, train
from .table import TableError, build_table, deserialize_table, serialize_table, table_stats

log = logging.getLogger("glrstar")


class CliError(Exception):
    pass


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}") from None


def _write(path: str, data: bytes | str) -> None:
    try:
        if isinstance(data, str):
            Path(path).write_text(data, encoding="utf-8")
        else:
            Path(path).write_bytes(data)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror or e}") from None


def _load_table(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CliError(f"cannot read table {path}: {e.strerror or e}") from None
    try:
        return deserialize_table(data)
    except (TableError, GrammarError) as e:
        raise CliError(f"{path}: {e}") from None


def _load_config(path: str | None):
    if path is None:
        return DEFAULT_WEIGHTS, DEFAULT_THRESHOLDS
    try:
        w, raw = load_weights(path)
        return w, QualityThresholds.from_dict(raw)
    except OSError as e:
        raise CliError(f"cannot read weights {path}: {e.strerror or e}") from None
    except (ValueError, TypeError) as e:
        raise CliError(f"bad weights file {path}: {e}") from None


def _beam(args) -> BeamConfig:
    try:
        return BeamConfig(args.beam_delta, args.beam_cap, not args.no_beam)
    except ValueError as e:
        raise CliError(str(e)) from None


# -- commands --------------------------------------------------------------


def cmd_compile(args) -> int:
    text = _read_text(args.grammar)
    subs = _read_text(args.substitutions) if args.substitutions else None
    try:
        g = augment(load_grammar(text, subs))
    except GrammarError as e:
        raise CliError(f"{args.grammar}: {e}") from None
    for w in g.warnings:
        log.warning("%s: %s", args.grammar, w)
    t = build_table(g)
    _write(args.output, serialize_table(t))
    s = table_stats(t)
    print(f"{s['state_count']} states, {s['cell_count']} cells, {s['conflict_cell_count']} conflict cells")
    return 0


def _candidate_json(c, g, n, th) -> dict:
    b = c.breakdown
    q = classify(b, max(n, 1), th)
    return {
        "tree": c.sexpr(g),
        "skipped": [],  # filled by caller, needs the surface words
        "substitutions": [{"position": p, "heard": h, "used": u} for p, h, u in c.substitutions()],
        "fragments": b.fragment_count,
        "log10_pscore": b.log10_pscore,
        "penalties": b.penalties(),
        "quality": {"label": q.label, "reasons": list(q.reasons)},
    }


def cmd_parse(args) -> int:
    t = _load_table(args.table)
    g = t.grammar
    w, th = _load_config(args.weights)
    words = args.sentence.split()
    tokens = tokenize(g, words)
    if args.no_skip:
        out = parse(g, t, tokens, substitutions=not args.no_substitutions)
    else:
        out = parse_robust(g, t, tokens, _beam(args), substitutions=not args.no_substitutions)
    mode = SKIP_ONLY if args.mode == "skip-only" else FULL
    cands = best_candidates(out.accept_roots, g, tokens, w, args.n_best, mode)
    if args.dot:
        _write(args.dot, out.gss.to_dot())
    result = {"status": out.status, "candidates": [], "diagnostics": out.diagnostics}
    for c in cands:
        d = _candidate_json(c, g, len(words), th)
        d["skipped"] = [[p, words[p]] for p in c.skipped]
        result["candidates"].append(d)
    if args.json:
        print(json.dumps(result, indent=2))
        return 0
    print(out.status)
    for i, d in enumerate(result["candidates"], 1):
        skipped = " ".join(f"{p}:{wd}" for p, wd in d["skipped"]) or "-"
        print(f"{i}. {d['tree']}")
        print(f"   skipped {skipped}  subs {len(d['substitutions'])}  fragments {d['fragments']}  "
              f"combined {d['penalties']['combined']:.4f}  quality {d['quality']['label']}")
    return 0


def cmd_train(args) -> int:
    t = _load_table(args.table)
    g = t.grammar
    records, errors = read_treebank(_read_text(args.treebank))
    total = len(records) + len(errors)
    traces = []
    for lineno, sentence, trees in records:
        try:
            traces.append(derive_action_sequence(g, t, sentence, trees))
        except DerivationError as e:
            errors.append(f"line {lineno}: {e}")
    for e in errors:
        print(f"warning: {args.treebank}: skipped {e}", file=sys.stderr)
    print(f"{len(traces)}/{total} used")
    if not traces:
        raise CliError("no usable trees in the treebank")
    try:
        trained = train(t, traces, args.alpha)
    except ValueError as e:
        raise CliError(str(e)) from None
    _write(args.output, serialize_table(trained))
    return 0


def cmd_eval(args) -> int:
    t = _load_table(args.table)
    w, th = _load_config(args.weights)
    try:
        records = read_corpus(_read_text(args.corpus))
    except ValueError as e:
        raise CliError(f"{args.corpus}: {e}") from None
    modes = args.modes.split(",") if args.modes else list(EVAL_MODES)
    bad = [m for m in modes if m not in EVAL_MODES]
    if bad:
        raise CliError(f"unknown mode(s): {', '.join(bad)}")
    report = evaluate(t.grammar, t, records, modes, w, th, _beam(args))
    if args.report:
        _write(args.report, json.dumps(report.to_json(), indent=2) + "\n")
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        sys.stdout.write(render_table(report.rows))
        sys.stdout.write(render_agreement(report))
    return 0


def cmd_corrupt(args) -> int:
    try:
        records = read_corpus(_read_text(args.corpus))
    except ValueError as e:
        raise CliError(f"{args.corpus}: {e}") from None
    confusions = None
    if args.table:
        confusions = confusions_from(_load_table(args.table).grammar.substitutions)
    try:
        out = corrupt(records, args.delete, args.insert, args.substitute, args.seed, confusions)
    except ValueError as e:
        raise CliError(str(e)) from None
    text = write_corpus(out)
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


# -- argument parsing ------------------------------------------------------


def _add_beam_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam-delta", type=int, default=2, help="skips allowed above the best (default 2)")
    p.add_argument("--beam-cap", type=int, default=30, help="skip origins per word (default 30)")
    p.add_argument("--no-beam", action="store_true", help="unrestricted skipping")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glrstar", description="Robust GLR* parsing toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="build a parse table from a grammar file")
    p.add_argument("grammar")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--substitutions", help="substitution file (heard => replacement)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("parse", help="parse one sentence")
    p.add_argument("table")
    p.add_argument("sentence")
    p.add_argument("--no-skip", action="store_true", help="plain GLR, no word skipping")
    p.add_argument("--no-substitutions", action="store_true")
    _add_beam_flags(p)
    p.add_argument("--weights", help="JSON file with feature weights and quality thresholds")
    p.add_argument("--mode", choices=("full", "skip-only"), default="full")
    p.add_argument("--n-best", type=int, default=1)
    p.add_argument("--dot", help="write the stack and forest as DOT to this path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("train", help="train action probabilities from a treebank")
    p.add_argument("table")
    p.add_argument("treebank")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a corpus in several modes")
    p.add_argument("table")
    p.add_argument("corpus")
    p.add_argument("--weights")
    p.add_argument("--modes", help=f"comma separated, from {','.join(EVAL_MODES)} (default all)")
    _add_beam_flags(p)
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("corrupt", help="add synthetic noise to a corpus")
    p.add_argument("corpus")
    p.add_argument("--delete", type=float, default=0.0)
    p.add_argument("--insert", type=float, default=0.0)
    p.add_argument("--substitute", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--table", help="take confusable words from this table's substitution list")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_corrupt)
    return ap


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("GLRSTAR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "n_best", 1) < 1:
        print("glrstar: error: --n-best must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except CliError as e:
        print(f"glrstar: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
