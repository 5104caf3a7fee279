"""Corpus evaluation in three modes and the parsable/good report."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

from .glr import parse
from .grammar import Grammar, tokenize
from .quality import DEFAULT_THRESHOLDS, QualityThresholds, classify
from .robust import BeamConfig, parse_robust
from .scoring import DEFAULT_WEIGHTS, FULL, SKIP_ONLY, FeatureWeights, ParseCandidate, best_candidates
from .corpus import CorpusRecord
from .table import ParseTable
from .trees import Tree, format_tree

GLR, SIMPLE, FULL_MODE = "glr", "glrstar-simple", "glrstar-full"
EVAL_MODES = (GLR, SIMPLE, FULL_MODE)
MODE_NAMES = {GLR: "GLR", SIMPLE: "GLR* (1)", FULL_MODE: "GLR* (2)"}
CLOSE_F1 = 0.75


# -- judging a parse against a gold tree -----------------------------------


def _lcs_alignment(a: Sequence[str], b: Sequence[str]) -> dict[int, int]:
    """Map indexes of ``a`` to indexes of ``b`` along one longest common subsequence."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            table[i][j] = table[i + 1][j + 1] + 1 if a[i] == b[j] else max(table[i + 1][j], table[i][j + 1])
    out, i, j = {}, 0, 0
    while i < n and j < m:
        if a[i] == b[j]:
            out[i] = j
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def _brackets(trees: Sequence[Tree], index_of: dict[int, int] | None) -> list[tuple[str, int, int]]:
    out = []
    counter = 0

    def walk(t: Tree) -> list[int]:
        nonlocal counter
        if t.is_leaf:
            k = counter
            counter += 1
            if index_of is None:
                return [k]
            return [index_of[k]] if k in index_of else []
        covered = [i for c in t.children for i in walk(c)]
        if covered:
            out.append((t.label, min(covered), max(covered)))
        return covered

    for t in trees:
        walk(t)
    return out


def bracket_f1(candidate: Sequence[Tree], gold: Sequence[Tree]) -> float:
    """Labelled-bracket F1, spans measured in gold word positions."""
    cand_words = [lf.word for t in candidate for lf in t.leaves()]
    gold_words = [lf.word for t in gold for lf in t.leaves()]
    align = _lcs_alignment(cand_words, gold_words)
    cb, gb = _brackets(candidate, align), _brackets(gold, None)
    if not cb or not gb:
        return 0.0
    remaining = list(gb)
    hits = 0
    for b in cb:
        if b in remaining:
            remaining.remove(b)
            hits += 1
    if hits == 0:
        return 0.0
    p, r = hits / len(cb), hits / len(gb)
    return 2 * p * r / (p + r)


def judge(candidate: Sequence[Tree], gold: Sequence[Tree]) -> str:
    """good: identical to gold; close: bracket F1 >= 0.75; bad otherwise."""
    if [format_tree(t) for t in candidate] == [format_tree(t) for t in gold]:
        return "good"
    return "close" if bracket_f1(candidate, gold) >= CLOSE_F1 else "bad"


# -- report ----------------------------------------------------------------


@dataclass
class ModeRow:
    mode: str
    total: int = 0
    unparsable: int = 0
    parsable: int = 0
    good_close: int = 0
    bad: int = 0

    def pct(self, count: int) -> float:
        return 100.0 * count / self.total if self.total else 0.0


@dataclass
class SentenceResult:
    index: int
    mode: str
    status: str
    skipped: list[int] = field(default_factory=list)
    substitutions: int = 0
    fragments: int = 0
    combined: float | None = None
    quality: str | None = None
    judgment: str | None = None
    tree: str | None = None


@dataclass
class Agreement:
    """How well the quality filter's 'bad' matches the judged 'bad'."""

    judged: int = 0
    judged_bad: int = 0
    flagged_bad: int = 0
    caught: int = 0  # judged bad and flagged bad
    good_flagged_bad: int = 0

    @property
    def recall(self) -> float | None:
        return self.caught / self.judged_bad if self.judged_bad else None

    @property
    def precision(self) -> float | None:
        return self.caught / self.flagged_bad if self.flagged_bad else None


@dataclass
class EvalReport:
    rows: list[ModeRow]
    details: list[SentenceResult]
    agreement: dict[str, Agreement]

    def row(self, mode: str) -> ModeRow:
        return next(r for r in self.rows if r.mode == mode)

    def to_json(self) -> dict:
        return {
            "rows": [dict(asdict(r), **{f"{k}_pct": round(r.pct(getattr(r, k)), 1)
                                        for k in ("unparsable", "parsable", "good_close", "bad")})
                     for r in self.rows],
            "agreement": {m: dict(asdict(a), recall=a.recall, precision=a.precision)
                          for m, a in self.agreement.items()},
            "sentences": [asdict(d) for d in self.details],
        }


def _cell(count: int, pct: float) -> str:
    return f"{count:>6} {pct:5.1f}%"


def render_table(rows: Sequence[ModeRow]) -> str:
    """Fixed-width text table: Unparsable, Parsable, Good/Close, Bad as number and percent."""
    width = max([len("Mode")] + [len(MODE_NAMES.get(r.mode, r.mode)) for r in rows])
    groups = ("Unparsable", "Parsable", "Good/Close", "Bad")
    seps = (" | ", " | ", " || ", " | ")
    head1 = "Mode".ljust(width) + "".join(s + g.center(13) for s, g in zip(seps, groups))
    head2 = " " * width + "".join(s + "Number" + "Pct".rjust(7) for s in seps)
    rule = "-" * len(head1)
    lines = [head1, head2, rule]
    for r in rows:
        counts = (r.unparsable, r.parsable, r.good_close, r.bad)
        lines.append(MODE_NAMES.get(r.mode, r.mode).ljust(width)
                     + "".join(s + _cell(c, r.pct(c)) for s, c in zip(seps, counts)))
    return "\n".join(line.rstrip() for line in lines) + "\n"


# -- running ---------------------------------------------------------------


def _result(index: int, mode: str, record: CorpusRecord, cand: ParseCandidate | None, g: Grammar,
            th: QualityThresholds) -> SentenceResult:
    if cand is None:
        return SentenceResult(index, mode, "unparsable", judgment=None)
    b = cand.breakdown
    frags = cand.fragments(g)
    if record.gold_tree is not None:
        judgment = judge(frags, record.gold_tree)
    else:
        judgment = record.gold_label if record.gold_label in ("good", "close", "bad") else None
    n = max(len(record.sentence), 1)
    return SentenceResult(
        index, mode, "parsed", cand.skipped, b.sub_count, b.fragment_count, b.combined,
        classify(b, n, th).label, judgment, cand.sexpr(g),
    )


def evaluate(
    g: Grammar,
    t: ParseTable,
    records: Sequence[CorpusRecord],
    modes: Sequence[str] = EVAL_MODES,
    weights: FeatureWeights = DEFAULT_WEIGHTS,
    thresholds: QualityThresholds = DEFAULT_THRESHOLDS,
    beam: BeamConfig = BeamConfig(),
) -> EvalReport:
    """Parse every record in each mode.

    ``glr`` never skips or substitutes; the two GLR* modes share one robust
    parse and differ only in ranking (skip count first vs. full score).
    """
    for m in modes:
        if m not in EVAL_MODES:
            raise ValueError(f"unknown evaluation mode {m!r}")
    details: list[SentenceResult] = []
    for i, record in enumerate(records):
        tokens = tokenize(g, record.sentence)
        if GLR in modes:
            out = parse(g, t, tokens)
            best = best_candidates(out.accept_roots, g, tokens, weights)
            details.append(_result(i, GLR, record, best[0] if best else None, g, thresholds))
        if SIMPLE in modes or FULL_MODE in modes:
            out = parse_robust(g, t, tokens, beam)
            for m, rank in ((SIMPLE, SKIP_ONLY), (FULL_MODE, FULL)):
                if m in modes:
                    best = best_candidates(out.accept_roots, g, tokens, weights, mode=rank)
                    details.append(_result(i, m, record, best[0] if best else None, g, thresholds))
    return summarize(details, modes, len(records))


def summarize(details: Sequence[SentenceResult], modes: Sequence[str], total: int) -> EvalReport:
    ordered = [m for m in EVAL_MODES if m in modes]
    rows = {m: ModeRow(m, total) for m in ordered}
    agreement = {m: Agreement() for m in ordered}
    for d in sorted(details, key=lambda d: (d.index, d.mode)):
        row, agr = rows[d.mode], agreement[d.mode]
        if d.status != "parsed":
            row.unparsable += 1
            continue
        row.parsable += 1
        if d.judgment is None:
            continue
        is_bad = d.judgment == "bad"
        flagged = d.quality == "bad"
        row.bad += is_bad
        row.good_close += not is_bad
        agr.judged += 1
        agr.judged_bad += is_bad
        agr.flagged_bad += flagged
        agr.caught += is_bad and flagged
        agr.good_flagged_bad += flagged and not is_bad
    return EvalReport(list(rows.values()), sorted(details, key=lambda d: (d.index, ordered.index(d.mode))),
                      agreement)


def render_agreement(report: EvalReport) -> str:
    lines = []
    for m, a in report.agreement.items():
        if not a.judged:
            continue
        lines.append(
            f"{MODE_NAMES[m]}: quality filter flagged {a.caught} of {a.judged_bad} bad parses; "
            f"{a.good_flagged_bad} of {a.judged - a.judged_bad} good/close parses flagged bad"
        )
    return "\n".join(lines) + ("\n" if lines else "")
