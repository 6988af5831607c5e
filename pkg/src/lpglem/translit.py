"""Buckwalter transliteration and lemma normalization.

Everything downstream of the readers works on Buckwalter ASCII: one byte per
Arabic symbol keeps the rewrite rules and edit distances unambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

# Buckwalter symbol -> Arabic code point.  Includes the four extended letters
# (P, J, V, G) used for loanwords.
BW2AR = {
    "'": "ء",  # hamza
    "|": "آ",  # alef madda
    ">": "أ",  # hamza above alef
    "&": "ؤ",  # hamza on waw
    "<": "إ",  # hamza below alef
    "}": "ئ",  # hamza on ya
    "A": "ا",
    "b": "ب",
    "p": "ة",  # ta marbuta
    "t": "ت",
    "v": "ث",
    "j": "ج",
    "H": "ح",
    "x": "خ",
    "d": "د",
    "*": "ذ",
    "r": "ر",
    "z": "ز",
    "s": "س",
    "$": "ش",
    "S": "ص",
    "D": "ض",
    "T": "ط",
    "Z": "ظ",
    "E": "ع",
    "g": "غ",
    "_": "ـ",  # tatweel
    "f": "ف",
    "q": "ق",
    "k": "ك",
    "l": "ل",
    "m": "م",
    "n": "ن",
    "h": "ه",
    "w": "و",
    "Y": "ى",  # alef maqsura
    "y": "ي",
    "F": "ً",  # fathatan
    "N": "ٌ",  # dammatan
    "K": "ٍ",  # kasratan
    "a": "َ",
    "u": "ُ",
    "i": "ِ",
    "~": "ّ",  # shadda
    "o": "ْ",  # sukun
    "`": "ٰ",  # dagger alef
    "{": "ٱ",  # alef wasla
    "P": "پ",
    "J": "چ",
    "V": "ڤ",
    "G": "گ",
}
AR2BW = {ar: bw for bw, ar in BW2AR.items()}
assert len(AR2BW) == len(BW2AR)

# Arabic-block characters with no Buckwalter symbol that are kept as-is:
# comma, semicolon, question mark, Arabic-Indic digits, number punctuation.
ARABIC_PASSTHROUGH = frozenset(
    "،؛؟" + "".join(chr(c) for c in range(0x0660, 0x066E))
)

SHORT_VOWELS = "aiuo"
TANWEEN = "FNK"
SHADDA = "~"
DAGGER_ALEF = "`"
DIACRITICS = SHORT_VOWELS + TANWEEN + SHADDA + DAGGER_ALEF
SUN_LETTERS = "tvd*rzs$SDTZln"

_DIAC_RE = re.compile("[" + re.escape(DIACRITICS) + "]")


class TransliterationError(ValueError):
    pass


def _in_arabic_block(ch: str) -> bool:
    return "؀" <= ch <= "ۿ"


def to_buckwalter(text: str) -> str:
    """Transliterate Arabic script to Buckwalter ASCII.

    Characters outside the Arabic block are copied unchanged.  Note that ASCII
    characters which are themselves Buckwalter symbols (``$``, ``*``, ``|`` and
    so on) cannot survive a round trip, so callers should not mix them in.
    """
    out = []
    for pos, ch in enumerate(text):
        bw = AR2BW.get(ch)
        if bw is not None:
            out.append(bw)
        elif not _in_arabic_block(ch) or ch in ARABIC_PASSTHROUGH:
            out.append(ch)
        else:
            raise TransliterationError(
                f"no Buckwalter symbol for U+{ord(ch):04X} at position {pos}"
            )
    return "".join(out)


def from_buckwalter(text: str) -> str:
    """Inverse of :func:`to_buckwalter`."""
    out = []
    for pos, ch in enumerate(text):
        ar = BW2AR.get(ch)
        if ar is not None:
            out.append(ar)
        elif ch.isascii() and ch.isalpha():
            raise TransliterationError(
                f"unknown Buckwalter symbol {ch!r} at position {pos}"
            )
        elif ch in AR2BW or (_in_arabic_block(ch) and ch not in ARABIC_PASSTHROUGH):
            raise TransliterationError(
                f"Arabic character U+{ord(ch):04X} in Buckwalter input at position {pos}"
            )
        else:
            out.append(ch)
    return "".join(out)


def has_arabic(text: str) -> bool:
    return any(ch in AR2BW for ch in text)


def dediacritize(s: str) -> str:
    """Strip short vowels, sukun, tanween, shadda and dagger alef."""
    return _DIAC_RE.sub("", s)


# ---------------------------------------------------------------------------
# Lemma normalization rules.  Each rule is a str -> str rewrite; RULE_ORDER is
# the fixed application order.
# ---------------------------------------------------------------------------

_NON_SHADDA = re.escape(SHORT_VOWELS + TANWEEN + DAGGER_ALEF)
_SHADDA_ORDER_RE = re.compile(f"([{_NON_SHADDA}]+)~")
_LONG_VOWEL_RE = re.compile(f"[{SHORT_VOWELS}]+(?=A)")
_TANWEEN_SHIFT_RE = re.compile(f"([{TANWEEN}])([^{re.escape(DIACRITICS)}])$")
_TRAILING_DIAC_RE = re.compile(f"[{re.escape(DIACRITICS)}]+$")
_SUN_SHADDA_RE = re.compile(f"^([{re.escape(SUN_LETTERS)}])~")


def _alef_maqsura(s: str) -> str:
    return s.replace("Yi", "yi")


def _shadda_order(s: str) -> str:
    return _SHADDA_ORDER_RE.sub(r"~\1", s)


def _alef_wasla_kasra(s: str) -> str:
    return s.replace("{i", "Ai")


def _long_vowel(s: str) -> str:
    return _LONG_VOWEL_RE.sub("", s)


def _dagger_alef(s: str) -> str:
    return s.replace("a`", "`").replace("`", "a")


def _tanween_position(s: str) -> str:
    return _TANWEEN_SHIFT_RE.sub(r"\2\1", s)


def _final_diacritics(s: str) -> str:
    # tanween survives: it is word-final by construction (see _tanween_position)
    m = _TRAILING_DIAC_RE.search(s)
    if m is None:
        return s
    kept = "".join(c for c in m.group() if c == SHADDA or c in TANWEEN)
    return s[: m.start()] + kept


def _sun_letter_shadda(s: str) -> str:
    return _SUN_SHADDA_RE.sub(r"\1", s)


def _alef_wasla(s: str) -> str:
    return s.replace("{", "A")


RULES = {
    "alef_maqsura": _alef_maqsura,
    "shadda_order": _shadda_order,
    "alef_wasla_kasra": _alef_wasla_kasra,
    "long_vowel": _long_vowel,
    "dagger_alef": _dagger_alef,
    "tanween_position": _tanween_position,
    "final_diacritics": _final_diacritics,
    "sun_letter_shadda": _sun_letter_shadda,
    "alef_wasla": _alef_wasla,
}
RULE_ORDER = tuple(RULES)
DEFAULT_RULES = frozenset(r for r in RULE_ORDER if r != "sun_letter_shadda")

_MAX_PASSES = 64


@dataclass(frozen=True)
class NormProfile:
    """Which normalization rules run.

    ``rule_flags`` selects rules; they always run in ``RULE_ORDER`` no matter
    how the set was built.  The sun-letter rule is only wanted for corpora that
    carry spurious lemma-initial shaddas, so it has its own switch.
    ``substitutions`` maps whole lemmas to hand-corrected forms.
    """

    rule_flags: frozenset = DEFAULT_RULES
    sun_letter_shadda_removal: bool = False
    substitutions: Mapping[str, str] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        unknown = set(self.rule_flags) - set(RULE_ORDER)
        if unknown:
            raise ValueError(f"unknown normalization rules: {sorted(unknown)}")
        object.__setattr__(self, "rule_flags", frozenset(self.rule_flags))

    def active_rules(self):
        for name in RULE_ORDER:
            if name == "sun_letter_shadda":
                if self.sun_letter_shadda_removal:
                    yield RULES[name]
            elif name in self.rule_flags:
                yield RULES[name]


DEFAULT_PROFILE = NormProfile()


def normalize_lemma(lemma: str, profile: NormProfile = DEFAULT_PROFILE) -> str:
    """Apply the enabled rules in order, repeating until nothing changes."""
    rules = list(profile.active_rules())
    current = lemma
    for _ in range(_MAX_PASSES):
        new = current
        for rule in rules:
            new = rule(new)
        new = profile.substitutions.get(new, new)
        if new == current:
            return current
        current = new
    raise RuntimeError(f"normalization of {lemma!r} did not reach a fixpoint")
