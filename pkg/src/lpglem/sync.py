"""Align gold references with the lexicon's LPG conventions.

Each evaluatable token's gold is scored against every analyzer candidate and
replaced by the best match, restricted to the dimensions the gold carried.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .lexicon import Lexicon, analyze, class_analysis
from .model import Analysis, CandidateSet, LpgEntry, Sentence, Token
from .translit import dediacritize


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class SyncConfig:
    """Weights for the lemma, POS and gloss components; ``dediacritized``
    compares lemmas without diacritics."""

    lemma_weight: float = 1.0
    pos_weight: float = 1.0
    gloss_weight: float = 1.0
    dediacritized: bool = False


DEFAULT_SYNC = SyncConfig()


def lemma_score(gold: str, cand: str, dediacritized: bool = False) -> float:
    if dediacritized:
        gold, cand = dediacritize(gold), dediacritize(cand)
    if gold == cand:
        return 1.0
    return 1.0 - levenshtein(gold, cand) / max(len(gold), len(cand))


def sync_score(gold: LpgEntry, cand: LpgEntry, config: SyncConfig = DEFAULT_SYNC) -> float:
    """Weighted mean of the component scores the gold makes available."""
    if not gold.lemma:
        raise ValueError("gold has no lemma")
    parts = [(config.lemma_weight, lemma_score(gold.lemma, cand.lemma, config.dediacritized))]
    if gold.has_pos:
        parts.append((config.pos_weight, 1.0 if gold.pos == cand.pos else 0.0))
    if gold.has_glosses:
        overlap = len(set(gold.glosses) & set(cand.glosses))
        parts.append((config.gloss_weight, overlap / len(gold.glosses)))
    total_w = sum(w for w, _ in parts)
    if total_w <= 0:
        raise ValueError("all active sync weights are zero")
    return sum(w * s for w, s in parts) / total_w


def synchronize_token(
    token: Token, candidates: CandidateSet, config: SyncConfig = DEFAULT_SYNC
) -> tuple[Analysis, float, bool]:
    """Best candidate for the token's gold.

    Ties go to a candidate that reproduces the gold exactly (so a second pass
    changes nothing), then to the lowest source rank, then the smallest key.
    Returns (analysis, score, evaluatable).
    """
    best, _, score, _ = _best(token.gold, candidates, config)
    return best, score, token.evaluatable


def _best(gold: LpgEntry, candidates: CandidateSet, config: SyncConfig):
    if not len(candidates):
        raise ValueError("empty candidate set")
    scored = [
        (sync_score(gold, a.entry, config), a.entry.project(gold) == gold, a) for a in candidates
    ]
    top = max(s for s, _, _ in scored)
    tied = [(exact, a) for s, exact, a in scored if s == top]
    tied.sort(key=lambda t: (not t[0], t[1].source_rank, t[1].key))
    return tied[0][1], tied, top, len(tied) > 1


@dataclass(frozen=True)
class SyncReport:
    tokens: int
    evaluatable: int
    mean_score: float
    ties: int
    changed: int
    unsynced: int  # evaluatable tokens whose only candidate was the backoff

    @property
    def evaluatable_pct(self) -> float:
        return 100.0 * self.evaluatable / self.tokens if self.tokens else 0.0

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("tokens", str(self.tokens)),
            ("evaluatable", str(self.evaluatable)),
            ("evaluatable_pct", f"{self.evaluatable_pct:.1f}"),
            ("mean_score", f"{self.mean_score:.6f}"),
            ("ties", str(self.ties)),
            ("changed", str(self.changed)),
            ("unsynced", str(self.unsynced)),
        ]

    def to_tsv(self) -> str:
        return "".join(f"{k}\t{v}\n" for k, v in self.rows())

    def to_text(self) -> str:
        width = max(len(k) for k, _ in self.rows())
        return "".join(f"{k:<{width}}  {v}\n" for k, v in self.rows())


def synchronize_corpus(
    corpus: Sequence[Sentence], lexicon: Lexicon, config: SyncConfig = DEFAULT_SYNC
) -> tuple[list[Sentence], SyncReport]:
    """Replace each evaluatable gold with its best-matching lexicon entry.

    Tokens the lexicon does not know keep their gold: the only candidate would
    be the proper-noun backoff, which carries no information about the gold.
    """
    out = []
    n_tokens = n_eval = ties = changed = unsynced = 0
    total = 0.0
    for sent in corpus:
        tokens = []
        for tok in sent.tokens:
            n_tokens += 1
            if not tok.evaluatable:
                tokens.append(tok)
                continue
            n_eval += 1
            if not lexicon.is_known(tok.surface) and class_analysis(tok.surface) is None:
                unsynced += 1
                tokens.append(tok)
                continue
            best, _, score, tie = _best(tok.gold, analyze(tok.surface, lexicon), config)
            total += score
            ties += tie
            new_gold = best.entry.project(tok.gold)
            if new_gold != tok.gold:
                changed += 1
            tokens.append(tok.with_gold(new_gold))
        out.append(Sentence(sent.id, tuple(tokens), sent.translation, sent.alignment))
    scored = n_eval - unsynced
    report = SyncReport(n_tokens, n_eval, total / scored if scored else 0.0, ties, changed, unsynced)
    return out, report
