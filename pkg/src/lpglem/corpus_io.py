"""Readers and writers for corpora, external prediction files and translations.

All files are UTF-8, tab-separated, with '#' comment lines.  Readers reject
malformed input rather than repairing it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .model import GLOSS_SEP, LpgEntry, Sentence, Token, split_glosses
from .translit import DEFAULT_PROFILE, NormProfile, has_arabic, normalize_lemma, to_buckwalter

ABSENT = "_"
SENT_ID_PREFIX = "# sent_id = "
CORPUS_COLUMNS = ("INDEX", "SURFACE", "LEMMA", "POS", "GLOSS")
ANNOTATED_COLUMNS = ("INDEX", "SURFACE", "PRED_LEMMA", "PRED_POS", "PRED_GLOSS", "STAGE")


class FormatError(ValueError):
    """Malformed input file; the message carries path and line number."""


def _bw(value: str) -> str:
    return to_buckwalter(value) if has_arabic(value) else value


def _lines(path):
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, raw in enumerate(f, 1):
            yield lineno, raw.rstrip("\n").rstrip("\r")


def _blocks(path):
    """Yield (sentence_id or None, [(lineno, cols), ...]) per blank-line block."""
    sent_id = None
    rows = []
    for lineno, line in _lines(path):
        if not line.strip():
            if rows:
                yield sent_id, rows
            elif sent_id is not None:
                raise FormatError(f"{path}:{lineno}: sentence {sent_id!r} has no tokens")
            sent_id, rows = None, []
        elif line.startswith(SENT_ID_PREFIX):
            if rows:
                raise FormatError(f"{path}:{lineno}: sent_id inside a sentence block")
            sent_id = line[len(SENT_ID_PREFIX):].strip()
        elif line.startswith("#"):
            continue
        else:
            rows.append((lineno, line.split("\t")))
    if rows:
        yield sent_id, rows


def _parse_index(path, lineno, value, expected):
    try:
        idx = int(value)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: bad token index {value!r}") from None
    if idx != expected:
        raise FormatError(f"{path}:{lineno}: token index {idx}, expected {expected}")
    return idx


def read_corpus(
    path: str | Path,
    profile: NormProfile = DEFAULT_PROFILE,
    pos_inventory: Optional[frozenset[str]] = None,
) -> list[Sentence]:
    """Read a token-per-line corpus.

    Columns are INDEX SURFACE LEMMA POS GLOSS with ``_`` for absent values;
    indices restart at 0 in every sentence.  A token is evaluatable iff it has
    a gold lemma.  Gold lemmas are normalized with ``profile``.
    """
    sentences = []
    ids = set()
    for n, (sent_id, rows) in enumerate(_blocks(path), 1):
        sent_id = sent_id or f"s{n}"
        if sent_id in ids:
            raise FormatError(f"{path}: duplicate sentence id {sent_id!r}")
        ids.add(sent_id)
        tokens = []
        for expected, (lineno, cols) in enumerate(rows):
            if len(cols) != len(CORPUS_COLUMNS):
                raise FormatError(
                    f"{path}:{lineno}: expected {len(CORPUS_COLUMNS)} columns, got {len(cols)}"
                )
            idx = _parse_index(path, lineno, cols[0], expected)
            surface, lemma, pos, gloss = (c.strip() for c in cols[1:])
            if not surface or surface == ABSENT:
                raise FormatError(f"{path}:{lineno}: empty surface")
            gold = None
            if lemma != ABSENT and lemma:
                if pos != ABSENT and pos_inventory is not None and pos not in pos_inventory:
                    raise FormatError(f"{path}:{lineno}: POS {pos!r} not in inventory")
                norm = normalize_lemma(_bw(lemma), profile)
                if not norm:
                    raise FormatError(f"{path}:{lineno}: lemma {lemma!r} is empty after normalization")
                gold = LpgEntry(
                    norm,
                    None if pos == ABSENT else pos,
                    () if gloss == ABSENT else split_glosses(gloss),
                )
            tokens.append(Token(sent_id, idx, _bw(surface), gold, gold is not None))
        sentences.append(Sentence(sent_id, tuple(tokens)))
    return sentences


def _gold_cols(gold: Optional[LpgEntry]) -> list[str]:
    if gold is None:
        return [ABSENT, ABSENT, ABSENT]
    return [
        gold.lemma,
        gold.pos or ABSENT,
        GLOSS_SEP.join(gold.glosses) if gold.glosses else ABSENT,
    ]


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _header_lines(header: Iterable[str]) -> list[str]:
    return ["# " + h for h in header]


def format_corpus(sentences: Iterable[Sentence], header: Iterable[str] = ()) -> str:
    out = _header_lines(header)
    for sent in sentences:
        out.append(SENT_ID_PREFIX + sent.id)
        for tok in sent.tokens:
            out.append("\t".join([str(tok.index), tok.surface] + _gold_cols(tok.gold)))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_corpus(path, sentences: Iterable[Sentence], header: Iterable[str] = ()) -> None:
    _write_text(path, format_corpus(sentences, header))


def format_annotated(sentences: Iterable[Sentence], selections: Mapping, header: Iterable[str] = ()) -> str:
    """Render predictions; ``selections`` maps (sentence_id, index) to an object
    with ``analysis`` and ``stage`` attributes."""
    out = _header_lines(header)
    out.append("# " + "\t".join(ANNOTATED_COLUMNS))
    for sent in sentences:
        out.append(SENT_ID_PREFIX + sent.id)
        for tok in sent.tokens:
            sel = selections[(sent.id, tok.index)]
            out.append(
                "\t".join([str(tok.index), tok.surface] + _gold_cols(sel.analysis.entry) + [sel.stage])
            )
        out.append("")
    return "\n".join(out) + "\n"


def write_annotated(path, sentences: Iterable[Sentence], selections: Mapping, header: Iterable[str] = ()) -> None:
    _write_text(path, format_annotated(sentences, selections, header))


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    entry: LpgEntry
    stage: str


def read_annotated(path) -> dict[tuple[str, int], AnnotatedToken]:
    """Read a file produced by :func:`write_annotated`."""
    out = {}
    for n, (sent_id, rows) in enumerate(_blocks(path), 1):
        sent_id = sent_id or f"s{n}"
        for expected, (lineno, cols) in enumerate(rows):
            if len(cols) != len(ANNOTATED_COLUMNS):
                raise FormatError(
                    f"{path}:{lineno}: expected {len(ANNOTATED_COLUMNS)} columns, got {len(cols)}"
                )
            idx = _parse_index(path, lineno, cols[0], expected)
            lemma, pos, gloss = cols[2:5]
            if lemma == ABSENT:
                raise FormatError(f"{path}:{lineno}: missing predicted lemma")
            entry = LpgEntry(lemma, None if pos == ABSENT else pos,
                             () if gloss == ABSENT else tuple(gloss.split(GLOSS_SEP)))
            key = (sent_id, idx)
            if key in out:
                raise FormatError(f"{path}:{lineno}: duplicate token {key}")
            out[key] = AnnotatedToken(cols[1], entry, cols[5])
    return out


# ---------------------------------------------------------------------------
# external model outputs
# ---------------------------------------------------------------------------

class PredictionKind(str, Enum):
    POS_TOPSET = "pos_topset"
    S2S_LEMMA = "s2s_lemma"
    LEXC_LPG = "lexc_lpg"
    CLUSTER_ID = "cluster_id"


@dataclass(frozen=True)
class PredictionFile:
    kind: PredictionKind
    records: Mapping[tuple[str, int], object]

    def get(self, sentence_id: str, index: int):
        return self.records.get((sentence_id, index))

    def __len__(self):
        return len(self.records)


def parse_topset(payload: str) -> tuple[tuple[str, float], ...]:
    """``noun:0.93;verb:0.05`` -> ranked ((tag, score), ...)."""
    ranked = []
    for item in payload.split(";"):
        tag, sep, score = item.strip().rpartition(":")
        if not sep or not tag:
            raise ValueError(f"bad POS:score item {item!r}")
        value = float(score)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"score {value} outside [0, 1]")
        ranked.append((tag, value))
    # stable: equal scores keep file order
    ranked.sort(key=lambda p: -p[1])
    return tuple(ranked)


def _parse_payload(kind: PredictionKind, payload: str):
    if kind is PredictionKind.POS_TOPSET:
        return parse_topset(payload)
    if kind is PredictionKind.S2S_LEMMA:
        return _bw(payload)
    if kind is PredictionKind.LEXC_LPG:
        return payload
    cid = int(payload)
    if cid < 0:
        raise ValueError(f"negative cluster id {cid}")
    return cid


def read_predictions(path, kind: PredictionKind | str) -> PredictionFile:
    """Read SENTENCE_ID, TOKEN_INDEX, PAYLOAD rows for one prediction kind."""
    kind = PredictionKind(kind)
    records = {}
    for lineno, line in _lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
        sid, idx_s, payload = cols
        try:
            idx = int(idx_s)
            if idx < 0:
                raise ValueError(f"negative token index {idx}")
            if not payload.strip():
                raise ValueError("empty payload")
            value = _parse_payload(kind, payload.strip())
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from None
        key = (sid, idx)
        if key in records:
            raise FormatError(f"{path}:{lineno}: duplicate prediction for {sid}:{idx}")
        records[key] = value
    return PredictionFile(kind, records)


def parse_alignment(line: str) -> dict[int, tuple[int, ...]]:
    """``0-1 1-0`` -> {0: (1,), 1: (0,)} (source index -> target indices)."""
    pairs: dict[int, list[int]] = {}
    for item in line.split():
        src, sep, tgt = item.partition("-")
        if not sep or not src.isdigit() or not tgt.isdigit():
            raise ValueError(f"malformed alignment pair {item!r}")
        pairs.setdefault(int(src), []).append(int(tgt))
    return {s: tuple(sorted(set(t))) for s, t in sorted(pairs.items())}


def read_translations(path) -> dict[str, tuple[tuple[str, ...], dict[int, tuple[int, ...]]]]:
    """Two lines per sentence: ``SENT_ID<TAB>english words`` then the
    alignment line (possibly empty).  Index ranges are checked when the
    translation is attached to a sentence."""
    lines = [(n, l) for n, l in _lines(path) if not l.startswith("#")]
    # trailing empty alignment line may be missing
    if len(lines) % 2:
        lines.append((lines[-1][0] + 1, ""))
    out = {}
    for (n1, head), (n2, align) in zip(lines[::2], lines[1::2]):
        sid, sep, text = head.partition("\t")
        if not sep or not sid:
            raise FormatError(f"{path}:{n1}: expected SENT_ID<TAB>translation")
        try:
            alignment = parse_alignment(align)
        except ValueError as e:
            raise FormatError(f"{path}:{n2}: {e}") from None
        if sid in out:
            raise FormatError(f"{path}:{n1}: duplicate sentence id {sid!r}")
        out[sid] = (tuple(text.split()), alignment)
    return out


def attach_translations(sentences: Iterable[Sentence], translations: Mapping) -> list[Sentence]:
    out = []
    for sent in sentences:
        if sent.id in translations:
            words, alignment = translations[sent.id]
            sent = sent.with_translation(words, alignment)
        out.append(sent)
    return out


def read_instance_vectors(path) -> dict[tuple[str, int], np.ndarray]:
    """SENTENCE_ID, TOKEN_INDEX, space-separated floats."""
    out = {}
    dim = None
    for lineno, line in _lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
        try:
            key = (cols[0], int(cols[1]))
            vec = np.array([float(x) for x in cols[2].split()], dtype=np.float64)
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from None
        if dim is None:
            dim = len(vec)
        if len(vec) != dim or dim == 0:
            raise FormatError(f"{path}:{lineno}: vector of length {len(vec)}, expected {dim}")
        if key in out:
            raise FormatError(f"{path}:{lineno}: duplicate vector for {key}")
        out[key] = vec
    return out
