"""Generate the synthetic treebank and test corpora under data/.

Sentences are random derivations of the flight grammar; the treebank and
the test set are drawn with different seeds.  The noisy corpus is the clean
test set passed through the corruption step (delete/insert/substitute at
0.1 each, seed 7), keeping each sentence's intended tree as its gold tree.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

from glrstar.corpus import CorpusRecord, confusions_from, corrupt, write_corpus
from glrstar.grammar import load_grammar
from glrstar.trees import Tree, format_tree


def generate(g, rng: random.Random, symbol: str, depth: int) -> Tree:
    if symbol in g.terminals:
        words = sorted(w for w, ts in g.lexicon.items() if symbol in ts)
        return Tree(symbol, word=rng.choice(words))
    rules = g.rules_for(symbol)
    if depth <= 0:
        # prefer rules without recursion once deep enough
        rules = [r for r in rules if symbol not in r.rhs] or rules
        rules = sorted(rules, key=lambda r: len(r.rhs))[:2]
    rule = rng.choice(rules)
    return Tree(symbol, tuple(generate(g, rng, s, depth - 1) for s in rule.rhs))


def sample(g, rng: random.Random, count: int, max_len: int) -> list[Tree]:
    out = []
    while len(out) < count:
        t = generate(g, rng, g.start, 4)
        if 2 <= len(list(t.leaves())) <= max_len:
            out.append(t)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--train", type=int, default=250)
    ap.add_argument("--test", type=int, default=200)
    args = ap.parse_args()
    data = Path(args.data)
    g = load_grammar((data / "flights.grammar").read_text(), (data / "flights.subs").read_text())

    train = sample(g, random.Random(1), args.train, 12)
    (data / "treebank.txt").write_text(
        "".join(" ".join(lf.word for lf in t.leaves()) + "\t" + format_tree(t) + "\n" for t in train)
    )
    test = sample(g, random.Random(2), args.test, 12)
    clean = [CorpusRecord(tuple(lf.word for lf in t.leaves()), None, (t,)) for t in test]
    (data / "clean.corpus").write_text(write_corpus(clean))
    noisy = corrupt(clean, 0.1, 0.1, 0.1, seed=7, confusions=confusions_from(g.substitutions))
    (data / "noisy.corpus").write_text(write_corpus(noisy))


if __name__ == "__main__":
    main()
