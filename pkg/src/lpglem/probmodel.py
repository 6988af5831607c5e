"""Additively smoothed unigram model over (lemma, POS) pairs."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .model import Sentence


@dataclass(frozen=True)
class UnigramModel:
    counts: Mapping[tuple[str, str], int] = field(hash=False)
    total: int
    vocab: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.vocab < 1:
            raise ValueError("vocab must be at least 1")
        if self.total != sum(self.counts.values()):
            raise ValueError("total does not match counts")

    def count(self, lemma: str, pos: str) -> int:
        return self.counts.get((lemma, pos), 0)


def train(corpus: Iterable[Sentence], alpha: float = 1.0) -> UnigramModel:
    """Count gold (lemma, POS) pairs of evaluatable tokens.

    The vocabulary gets one extra slot that all unseen pairs share.
    """
    counts: Counter = Counter()
    for sent in corpus:
        for tok in sent.tokens:
            if tok.evaluatable and tok.gold.has_pos:
                counts[(tok.gold.lemma, tok.gold.pos)] += 1
    if not counts:
        raise ValueError("no evaluatable tokens with gold lemma and POS")
    return UnigramModel(dict(counts), sum(counts.values()), len(counts) + 1, alpha)


def logp(model: UnigramModel, lemma: str, pos: str) -> float:
    c = model.count(lemma, pos)
    return math.log((c + model.alpha) / (model.total + model.alpha * model.vocab))


def save_model(model: UnigramModel, path, header=()) -> None:
    lines = ["# " + h for h in header]
    lines += [f"# N={model.total}\tV={model.vocab}\talpha={model.alpha!r}"]
    for (lemma, pos), c in sorted(model.counts.items()):
        lines.append(f"{lemma}\t{pos}\t{c}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_model(path) -> UnigramModel:
    header = None
    counts = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if line.startswith("# N="):
                header = dict(item.split("=", 1) for item in line[2:].split("\t"))
                continue
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected LEMMA, POS, COUNT")
            lemma, pos, c = cols
            if (lemma, pos) in counts:
                raise ValueError(f"{path}:{lineno}: duplicate pair {lemma}/{pos}")
            counts[(lemma, pos)] = int(c)
    if header is None:
        raise ValueError(f"{path}: missing '# N=... V=... alpha=...' header")
    return UnigramModel(counts, int(header["N"]), int(header["V"]), float(header["alpha"]))
