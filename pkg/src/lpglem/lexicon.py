"""Out-of-context lexicon: surface form -> candidate analyses."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .model import NO_GLOSS, Analysis, CandidateSet, LpgEntry, SetKind, split_glosses
from .translit import BW2AR, DEFAULT_PROFILE, NormProfile, dediacritize, has_arabic, normalize_lemma, to_buckwalter

PROPER_NOUN_POS = "noun_prop"
DIGIT_POS = "digit"
PUNCT_POS = "punc"

N_COLUMNS = 5

_LOOKUP_TABLE = str.maketrans({"|": "A", "<": "A", ">": "A", "{": "A", "Y": "y"})
_DIGIT_RE = re.compile(r"^[0-9٠-٩]+([.,٫٬][0-9٠-٩]+)*$")


class LexiconFormatError(ValueError):
    pass


def lookup_key(surface: str) -> str:
    """Dediacritized surface with alef variants and final ya folded."""
    return dediacritize(surface).translate(_LOOKUP_TABLE)


def is_digit_token(surface: str) -> bool:
    return bool(_DIGIT_RE.match(surface))


def is_punct_token(surface: str) -> bool:
    # Buckwalter letters such as '$' or '*' are not punctuation here
    return bool(surface) and all(
        unicodedata.category(c)[0] in "PS" and c not in BW2AR for c in surface
    )


def class_analysis(surface: str) -> Optional[Analysis]:
    """The fixed analysis for digit and punctuation tokens, else None."""
    if is_digit_token(surface):
        pos = DIGIT_POS
    elif is_punct_token(surface):
        pos = PUNCT_POS
    else:
        return None
    return Analysis(LpgEntry(surface, pos, (NO_GLOSS,)), surface, 0)


def backoff_analysis(
    surface: str,
    profile: NormProfile = DEFAULT_PROFILE,
    proper_noun_pos: str = PROPER_NOUN_POS,
) -> Analysis:
    """Treat an unknown word as a proper noun whose lemma is the surface."""
    if not surface:
        raise ValueError("empty surface")
    # a surface of bare diacritics would normalize to nothing
    lemma = normalize_lemma(surface, profile) or surface
    return Analysis(LpgEntry(lemma, proper_noun_pos, (NO_GLOSS,)), surface, 0)


@dataclass
class Lexicon:
    entries: dict[str, tuple[Analysis, ...]] = field(default_factory=dict)
    lemma_set: frozenset[str] = frozenset()
    profile: NormProfile = DEFAULT_PROFILE
    proper_noun_pos: str = PROPER_NOUN_POS

    @classmethod
    def from_analyses(cls, rows, profile: NormProfile = DEFAULT_PROFILE, **kw) -> "Lexicon":
        """Build from (lookup_surface, Analysis) pairs; rank follows input order."""
        grouped: dict[str, list[Analysis]] = {}
        seen: set[tuple] = set()
        for surface, analysis in rows:
            key = lookup_key(surface)
            ident = (key, analysis.diac, analysis.entry)
            if ident in seen:
                continue
            seen.add(ident)
            bucket = grouped.setdefault(key, [])
            bucket.append(Analysis(analysis.entry, analysis.diac, len(bucket)))
        entries = {k: tuple(v) for k, v in grouped.items()}
        lemmas = frozenset(dediacritize(a.entry.lemma) for v in entries.values() for a in v)
        return cls(entries, lemmas, profile, **kw)

    def __len__(self):
        return sum(len(v) for v in self.entries.values())

    def analyses(self, surface: str) -> tuple[Analysis, ...]:
        """Raw analyses (distinct diacritized forms kept), with routing and backoff."""
        if not surface:
            raise ValueError("empty surface")
        special = class_analysis(surface)
        if special is not None:
            return (special,)
        found = self.entries.get(lookup_key(surface))
        if found:
            return found
        return (backoff_analysis(surface, self.profile, self.proper_noun_pos),)

    def is_known(self, surface: str) -> bool:
        return lookup_key(surface) in self.entries


def analyze(surface: str, lex: Lexicon) -> CandidateSet:
    """All candidate LPGs for a surface form, one per distinct LPG.

    Digits and punctuation get their fixed class analysis; words missing from
    the lexicon get the proper-noun backoff, so the result is never empty.
    """
    return CandidateSet.unique(SetKind.ALL, lex.analyses(surface))


def lemma_inventory(lex: Lexicon) -> frozenset[str]:
    return lex.lemma_set


def _field(value: str) -> str:
    value = value.strip()
    return to_buckwalter(value) if has_arabic(value) else value


def load_lexicon(
    path: str | Path,
    profile: NormProfile = DEFAULT_PROFILE,
    pos_inventory: Optional[frozenset[str]] = None,
    proper_noun_pos: str = PROPER_NOUN_POS,
) -> Lexicon:
    """Read the 5-column lexicon TSV.

    Columns: LOOKUP_SURFACE, DIAC_FORM, LEMMA, POS, GLOSSES (';'-separated).
    Arabic-script fields are transliterated; lemmas are normalized.
    """
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != N_COLUMNS:
                raise LexiconFormatError(
                    f"{path}:{lineno}: expected {N_COLUMNS} columns, got {len(cols)}"
                )
            surface, diac, lemma = (_field(c) for c in cols[:3])
            pos, glosses = cols[3].strip(), cols[4]
            if not surface or not lemma or not pos:
                raise LexiconFormatError(f"{path}:{lineno}: empty surface, lemma or POS")
            if pos_inventory is not None and pos not in pos_inventory:
                raise LexiconFormatError(f"{path}:{lineno}: POS {pos!r} not in inventory")
            gl = split_glosses(glosses) or (NO_GLOSS,)
            entry = LpgEntry(normalize_lemma(lemma, profile), pos, gl)
            rows.append((surface, Analysis(entry, diac or surface, 0)))
    return Lexicon.from_analyses(rows, profile, proper_noun_pos=proper_noun_pos)
