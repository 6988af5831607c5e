"""Accuracy at L / LP / LPG, ambiguity statistics, McNemar and error typing."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from scipy import stats

from .corpus_io import PredictionFile
from .lexicon import Lexicon, analyze
from .model import LpgEntry, Sentence, lpg_key
from .selection import filter_top
from .translit import dediacritize


class Granularity(str, Enum):
    L = "L"
    LP = "LP"
    LPG = "LPG"


GRANULARITIES = (Granularity.L, Granularity.LP, Granularity.LPG)


class EvalError(ValueError):
    pass


def gold_supports(gold: LpgEntry, g: Granularity) -> bool:
    if g is Granularity.L:
        return True
    if g is Granularity.LP:
        return gold.has_pos
    return gold.has_pos and gold.has_glosses


def matches(pred: LpgEntry, gold: LpgEntry, g: Granularity | str, gloss_mode: str = "intersect") -> bool:
    """Lemma equality, plus POS for LP, plus gloss agreement for LPG.

    ``gloss_mode="intersect"`` accepts any shared gloss; ``"equal"`` needs the
    same gloss set.
    """
    g = Granularity(g)
    if pred.lemma != gold.lemma:
        return False
    if g is Granularity.L:
        return True
    if pred.pos != gold.pos:
        return False
    if g is Granularity.LP:
        return True
    if gloss_mode == "equal":
        return set(pred.glosses) == set(gold.glosses)
    return bool(set(pred.glosses) & set(gold.glosses))


def _entry(p):
    if isinstance(p, LpgEntry):
        return p
    if hasattr(p, "entry"):
        return p.entry
    return p.analysis.entry


def supported(corpus: Iterable[Sentence], g: Granularity | str) -> bool:
    """True when every evaluatable gold carries the dimensions ``g`` needs."""
    g = Granularity(g)
    return all(gold_supports(t.gold, g) for s in corpus for t in s.tokens if t.evaluatable)


def correctness(predictions: Mapping, corpus: Iterable[Sentence], g: Granularity | str,
                gloss_mode: str = "intersect") -> list[bool]:
    """Per evaluatable token, in corpus order, whether the prediction matches.

    ``predictions`` maps (sentence_id, index) to an LpgEntry, a Selection or
    an annotated-file record.
    """
    g = Granularity(g)
    out = []
    for sent in corpus:
        for tok in sent.tokens:
            if not tok.evaluatable:
                continue
            if not gold_supports(tok.gold, g):
                raise EvalError(f"gold of {sent.id}:{tok.index} has no data for {g.value}")
            pred = predictions.get((sent.id, tok.index))
            if pred is None:
                raise EvalError(f"no prediction for evaluatable token {sent.id}:{tok.index}")
            out.append(matches(_entry(pred), tok.gold, g, gloss_mode))
    return out


def accuracy(predictions: Mapping, corpus: Sequence[Sentence], g: Granularity | str,
             gloss_mode: str = "intersect") -> float:
    """Fraction of evaluatable tokens predicted correctly at granularity ``g``."""
    flags = correctness(predictions, corpus, g, gloss_mode)
    if not flags:
        raise EvalError("no evaluatable tokens")
    return sum(flags) / len(flags)


def accuracy_row(predictions: Mapping, corpus: Sequence[Sentence]) -> dict[str, Optional[float]]:
    """Accuracy per granularity; None where the gold lacks the dimension."""
    return {g.value: accuracy(predictions, corpus, g) if supported(corpus, g) else None
            for g in GRANULARITIES}


# ---------------------------------------------------------------------------
# ambiguity statistics
# ---------------------------------------------------------------------------

LEVELS = ("Analyses", "LPG", "LP", "L")


def _project(a, level: str):
    e = a.entry
    if level == "Analyses":
        return (a.diac, lpg_key(e))
    if level == "LPG":
        return lpg_key(e)
    if level == "LP":
        return (e.lemma, e.pos)
    return e.lemma


@dataclass(frozen=True)
class AmbiguityRow:
    level: str
    all_mean: float
    top_mean: float
    recall: Optional[float]

    @property
    def ambig_reduction(self) -> float:
        """Percent drop in mean unique values after tagger filtering."""
        return 100.0 * (1.0 - self.top_mean / self.all_mean)


def _top_analyses(raw, top_keys):
    """Raw analyses restricted to the LPGs that survived tagger filtering."""
    return [a for a in raw if a.key in top_keys]


def ambiguity_stats(corpus: Sequence[Sentence], lexicon: Lexicon,
                    topset: Optional[PredictionFile] = None) -> list[AmbiguityRow]:
    """Mean unique values per token over All and Top sets, and Top-set recall.

    Recall is the share of evaluatable tokens whose gold appears in the Top set
    at that granularity: the best accuracy any selector over Top can reach.
    Tokens without tagger output use their All set as Top set.
    """
    n = 0
    all_sum = dict.fromkeys(LEVELS, 0)
    top_sum = dict.fromkeys(LEVELS, 0)
    hits = dict.fromkeys(LEVELS[1:], 0)
    n_eval = 0
    for sent in corpus:
        for tok in sent.tokens:
            n += 1
            raw = lexicon.analyses(tok.surface)
            cands = analyze(tok.surface, lexicon)
            payload = topset.get(sent.id, tok.index) if topset is not None else None
            top = filter_top(cands, payload)
            top_keys = set(top.keys())
            top_raw = _top_analyses(raw, top_keys)
            for level in LEVELS:
                all_sum[level] += len({_project(a, level) for a in raw})
                top_sum[level] += len({_project(a, level) for a in top_raw})
            if tok.evaluatable:
                n_eval += 1
                for level, g in (("LPG", Granularity.LPG), ("LP", Granularity.LP), ("L", Granularity.L)):
                    if gold_supports(tok.gold, g) and any(matches(a.entry, tok.gold, g) for a in top):
                        hits[level] += 1
    if n == 0:
        raise EvalError("empty corpus")
    rows = []
    for level in LEVELS:
        recall = None
        if level != "Analyses" and n_eval and supported(corpus, Granularity(level)):
            recall = hits[level] / n_eval
        rows.append(AmbiguityRow(level, all_sum[level] / n, top_sum[level] / n, recall))
    return rows


def format_ambiguity(rows: Sequence[AmbiguityRow], tsv: bool = False) -> str:
    header = ("Unique Avg", "All", "Top", "Ambig", "Recall")
    body = []
    for r in rows:
        body.append((
            r.level, f"{r.all_mean:.2f}", f"{r.top_mean:.2f}", f"{r.ambig_reduction:.1f}%",
            "" if r.recall is None else f"{100 * r.recall:.1f}%",
        ))
    return _table(header, body, tsv)


def _table(header, body, tsv: bool) -> str:
    if tsv:
        return "".join("\t".join(row) + "\n" for row in [header, *body])
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                               for i, (c, w) in enumerate(zip(row, widths))).rstrip())
    return "\n".join(lines) + "\n"


def format_accuracy(rows: Mapping[str, Mapping[str, Optional[float]]], tsv: bool = False) -> str:
    """One row per system, columns L / LP / LPG as percentages."""
    header = ("System", "L", "LP", "LPG")
    body = [
        (name, *("-" if row[g.value] is None else f"{100 * row[g.value]:.1f}" for g in GRANULARITIES))
        for name, row in rows.items()
    ]
    return _table(header, body, tsv)


# ---------------------------------------------------------------------------
# significance
# ---------------------------------------------------------------------------

MIN_CHI2_DISCORDANT = 10


def mcnemar(correct_a: Sequence[bool], correct_b: Sequence[bool],
            min_chi2: int = MIN_CHI2_DISCORDANT) -> tuple[float, float]:
    """McNemar's test on paired per-token correctness.

    The statistic is always the continuity-corrected chi-square value.  The
    p-value comes from the chi-square(1) tail when there are at least
    ``min_chi2`` discordant pairs and from the exact two-sided binomial test
    otherwise.
    """
    if len(correct_a) != len(correct_b):
        raise ValueError("correctness vectors differ in length")
    b = sum(1 for x, y in zip(correct_a, correct_b) if x and not y)
    c = sum(1 for x, y in zip(correct_a, correct_b) if y and not x)
    return mcnemar_counts(b, c, min_chi2)


def mcnemar_counts(b: int, c: int, min_chi2: int = MIN_CHI2_DISCORDANT) -> tuple[float, float]:
    n = b + c
    if n == 0:
        return 0.0, 1.0
    statistic = (abs(b - c) - 1) ** 2 / n
    if n >= min_chi2:
        p = float(stats.chi2.sf(statistic, df=1))
    else:
        p = float(stats.binomtest(min(b, c), n, 0.5).pvalue)
    return statistic, min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# error typing
# ---------------------------------------------------------------------------

_HAMZA_FOLD = str.maketrans({c: "'" for c in "><|{&}"})


def hamza_fold(s: str) -> str:
    return s.translate(_HAMZA_FOLD)


class ErrorType(str, Enum):
    DIACRITIZATION = "diacritization"
    PLAUSIBLE = "plausible"
    HALLUCINATION = "hallucination"


def error_typing(pred: LpgEntry, gold: LpgEntry, lexicon: Lexicon | frozenset) -> ErrorType:
    """Coarse automatic category for a wrong lemma.

    Same letters up to diacritics and hamza seat -> diacritization; a lemma the
    lexicon knows -> plausible; anything else -> hallucination.
    """
    if hamza_fold(dediacritize(pred.lemma)) == hamza_fold(dediacritize(gold.lemma)):
        return ErrorType.DIACRITIZATION
    inventory = lexicon.lemma_set if isinstance(lexicon, Lexicon) else lexicon
    if dediacritize(pred.lemma) in inventory:
        return ErrorType.PLAUSIBLE
    return ErrorType.HALLUCINATION
