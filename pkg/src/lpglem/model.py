"""Domain types: LPG entries, analyses, tokens, sentences and candidate sets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

NO_GLOSS = "NO_GLOSS"
KEY_SEP = "#"
GLOSS_SEP = ";"


def canonical_glosses(glosses: Iterable[str]) -> tuple[str, ...]:
    """Lowercase, strip, drop empties and duplicates, sort."""
    seen = set()
    for g in glosses:
        g = g.strip()
        if not g:
            continue
        seen.add(g if g == NO_GLOSS else g.lower())
    return tuple(sorted(seen))


def split_glosses(field_value: str) -> tuple[str, ...]:
    return canonical_glosses(field_value.split(GLOSS_SEP))


@dataclass(frozen=True, slots=True)
class LpgEntry:
    """A lemma with optional POS and glosses.

    Gold references may be partial (lemma only, lemma + POS); analyzer
    entries are always complete.  Glosses are stored canonicalized so that
    equality and :func:`lpg_key` agree.
    """

    lemma: str
    pos: Optional[str] = None
    glosses: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.lemma:
            raise ValueError("empty lemma")
        if self.pos == "":
            object.__setattr__(self, "pos", None)
        object.__setattr__(self, "glosses", canonical_glosses(self.glosses))

    @property
    def has_pos(self) -> bool:
        return self.pos is not None

    @property
    def has_glosses(self) -> bool:
        return bool(self.glosses)

    @property
    def is_complete(self) -> bool:
        return self.has_pos and self.has_glosses

    def project(self, like: "LpgEntry") -> "LpgEntry":
        """Keep only the dimensions that ``like`` carries."""
        return LpgEntry(
            self.lemma,
            self.pos if like.has_pos else None,
            self.glosses if like.has_glosses else (),
        )


def _escape(part: str) -> str:
    return part.replace("\\", "\\\\").replace(KEY_SEP, "\\" + KEY_SEP).replace(
        GLOSS_SEP, "\\" + GLOSS_SEP
    )


def lpg_key(entry: LpgEntry) -> str:
    """Canonical string id, e.g. ``Eaqod#noun#contract``.

    Separator characters inside fields are backslash-escaped, which keeps the
    mapping injective.
    """
    return KEY_SEP.join(
        (
            _escape(entry.lemma),
            _escape(entry.pos or ""),
            GLOSS_SEP.join(_escape(g) for g in entry.glosses),
        )
    )


def parse_lpg_key(key: str) -> LpgEntry:
    fields: list[list[str]] = [[]]
    part: list[str] = []
    chars = iter(key)
    for ch in chars:
        if ch == "\\":
            part.append(next(chars, ""))
        elif ch == KEY_SEP:
            fields[-1].append("".join(part))
            fields.append([])
            part = []
        elif ch == GLOSS_SEP:
            fields[-1].append("".join(part))
            part = []
        else:
            part.append(ch)
    fields[-1].append("".join(part))
    if len(fields) != 3 or len(fields[0]) != 1 or len(fields[1]) != 1:
        raise ValueError(f"malformed LPG key {key!r}")
    return LpgEntry(fields[0][0], fields[1][0] or None, tuple(fields[2]))


def load_pos_inventory(path: str | Path | None = None) -> frozenset[str]:
    """One tag per line; '#' comments and blank lines ignored."""
    if path is None:
        text = resources.files("lpglem.data").joinpath("pos_inventory.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    tags = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            tags.add(line)
    return frozenset(tags)


@dataclass(frozen=True, slots=True)
class Analysis:
    entry: LpgEntry
    diac: str
    source_rank: int = 0
    tagger_score: Optional[float] = None

    def __post_init__(self):
        if self.source_rank < 0:
            raise ValueError(f"negative source_rank {self.source_rank}")
        if self.tagger_score is not None and not 0.0 <= self.tagger_score <= 1.0:
            raise ValueError(f"tagger score {self.tagger_score} outside [0, 1]")

    @property
    def key(self) -> str:
        return lpg_key(self.entry)


@dataclass(frozen=True, slots=True)
class Token:
    sentence_id: str
    index: int
    surface: str
    gold: Optional[LpgEntry] = None
    evaluatable: bool = False

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative token index {self.index}")
        if self.evaluatable and self.gold is None:
            raise ValueError(
                f"token {self.sentence_id}:{self.index} is evaluatable without a gold lemma"
            )

    def with_gold(self, gold: Optional[LpgEntry]) -> "Token":
        return replace(self, gold=gold)


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]
    translation: Optional[tuple[str, ...]] = None
    alignment: Optional[Mapping[int, tuple[int, ...]]] = field(default=None, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise ValueError(
                    f"sentence {self.id}: token index {tok.index} at position {i}"
                )
        if self.translation is not None:
            object.__setattr__(self, "translation", tuple(self.translation))
        if self.alignment is not None:
            self.check_alignment(self.alignment)

    def check_alignment(self, alignment: Mapping[int, Sequence[int]]) -> None:
        n_tgt = len(self.translation or ())
        for src, tgts in alignment.items():
            if not 0 <= src < len(self.tokens):
                raise ValueError(f"sentence {self.id}: source index {src} out of range")
            for t in tgts:
                if not 0 <= t < n_tgt:
                    raise ValueError(f"sentence {self.id}: target index {t} out of range")

    def with_translation(self, words, alignment) -> "Sentence":
        return replace(self, translation=tuple(words), alignment=dict(alignment))

    def aligned_words(self, index: int) -> list[str]:
        if not self.alignment or not self.translation:
            return []
        return [self.translation[j] for j in self.alignment.get(index, ())]


class SetKind(str, Enum):
    ALL = "all"
    TOP = "top"


@dataclass(frozen=True)
class CandidateSet:
    kind: SetKind
    candidates: tuple[Analysis, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        keys = [a.key for a in self.candidates]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate LPG in candidate set")
        if self.kind is SetKind.TOP and any(a.tagger_score is None for a in self.candidates):
            raise ValueError("Top candidate without tagger score")

    @classmethod
    def unique(cls, kind: SetKind, analyses: Iterable[Analysis]) -> "CandidateSet":
        """Build a set keeping the first analysis for each LPG."""
        seen = set()
        kept = []
        for a in analyses:
            if a.key not in seen:
                seen.add(a.key)
                kept.append(a)
        return cls(kind, tuple(kept))

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def keys(self) -> list[str]:
        return [a.key for a in self.candidates]

    def subset(self, keep: Sequence[Analysis]) -> "CandidateSet":
        return CandidateSet(self.kind, tuple(keep))
