"""Corpus and treebank files, and synthetic noise for corpora."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .trees import Tree, format_tree, parse_sexprs

LABELS = ("good", "close", "bad", "unparsable")
FILLERS = ("uh", "um", "er", "hmm", "xx", "zzt")


class CorpusError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class CorpusRecord:
    sentence: tuple[str, ...]
    gold_label: str | None = None
    gold_tree: tuple[Tree, ...] | None = None  # one tree per fragment


def _read_tree(text: str, lineno: int) -> tuple[Tree, ...]:
    try:
        return tuple(parse_sexprs(text))
    except ValueError as e:
        raise CorpusError(lineno, str(e)) from None


def parse_corpus_line(line: str, lineno: int = 0) -> CorpusRecord:
    """``words [TAB label] [TAB tree]``; a field starting with '(' is the tree."""
    fields = line.rstrip("\n").split("\t")
    sentence = tuple(fields[0].split())
    label = tree = None
    for f in fields[1:]:
        f = f.strip()
        if not f:
            continue
        if f.startswith("("):
            if tree is not None:
                raise CorpusError(lineno, "more than one tree field")
            tree = _read_tree(f, lineno)
        elif label is None:
            if f not in LABELS:
                raise CorpusError(lineno, f"unknown gold label {f!r}")
            label = f
        else:
            raise CorpusError(lineno, f"unexpected field {f!r}")
    # The tree may describe the intended sentence rather than ``sentence``
    # itself: corrupted records keep the tree of their clean source.
    return CorpusRecord(sentence, label, tree)


def read_corpus(text: str) -> list[CorpusRecord]:
    return [
        parse_corpus_line(line, i)
        for i, line in enumerate(text.splitlines(), 1)
        if line.strip() and not line.lstrip().startswith("#")
    ]


def format_record(r: CorpusRecord) -> str:
    fields = [" ".join(r.sentence)]
    if r.gold_label is not None:
        fields.append(r.gold_label)
    if r.gold_tree is not None:
        fields.append(" ".join(format_tree(t) for t in r.gold_tree))
    return "\t".join(fields)


def write_corpus(records: Iterable[CorpusRecord]) -> str:
    return "".join(format_record(r) + "\n" for r in records)


def read_treebank(text: str) -> tuple[list[tuple[int, tuple[str, ...], tuple[Tree, ...]]], list[CorpusError]]:
    """``sentence TAB tree(s)`` records; malformed lines are returned as errors."""
    good, bad = [], []
    for i, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1].strip().startswith("("):
            bad.append(CorpusError(i, "expected 'sentence<TAB>tree'"))
            continue
        try:
            trees = _read_tree(parts[1], i)
        except CorpusError as e:
            bad.append(e)
            continue
        good.append((i, tuple(parts[0].split()), trees))
    return good, bad


def confusions_from(substitutions: Mapping[str, Iterable[str]]) -> dict[str, list[str]]:
    """Invert a substitution list: intended word -> words it is misheard as."""
    out: dict[str, list[str]] = {}
    for heard, repls in sorted(substitutions.items()):
        for r in sorted(repls):
            out.setdefault(r, []).append(heard)
    return out


def corrupt(
    records: Sequence[CorpusRecord],
    delete: float = 0.0,
    insert: float = 0.0,
    substitute: float = 0.0,
    seed: int = 0,
    confusions: Mapping[str, Sequence[str]] | None = None,
    fillers: Sequence[str] = FILLERS,
) -> list[CorpusRecord]:
    """Independently corrupt each word: delete it, swap it for a confusable
    word, and/or insert a filler before it.  Gold trees are kept; they
    describe the intended sentence.  Deterministic under ``seed``.
    """
    for name, rate in (("delete", delete), ("insert", insert), ("substitute", substitute)):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"{name} rate must be in [0, 1], got {rate}")
    confusions = confusions or {}
    vocab = sorted({w for r in records for w in r.sentence})
    rng = random.Random(seed)
    out = []
    for r in records:
        words: list[str] = []
        for w in r.sentence:
            # draw all three every time so one rate does not shift the others' stream
            u_ins, u_del, u_sub = rng.random(), rng.random(), rng.random()
            pick = rng.random()
            if u_ins < insert:
                words.append(fillers[int(pick * len(fillers)) % len(fillers)])
            if u_del < delete:
                continue
            if u_sub < substitute:
                options = list(confusions.get(w, ())) or [v for v in vocab if v != w] or [w]
                w = options[int(pick * len(options)) % len(options)]
            words.append(w)
        out.append(CorpusRecord(tuple(words), r.gold_label, r.gold_tree))
    return out
