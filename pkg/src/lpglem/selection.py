"""Candidate selection strategies and the sequential pipeline composer.

A pipeline starts from the analyzer's candidate set (optionally narrowed by
the POS tagger), applies filtering stages in order and lets a final selector
pick one analysis.  Every filter falls back to its input when it would leave
nothing, so pipelines are total.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .corpus_io import PredictionFile, PredictionKind
from .embeddings import EmbeddingError, EmbeddingProvider, cosine, phrase_embedding
from .lexicon import DIGIT_POS, Lexicon, analyze, class_analysis
from .model import NO_GLOSS, Analysis, CandidateSet, Sentence, SetKind, Token
from .probmodel import UnigramModel, logp
from .translit import DEFAULT_PROFILE, NormProfile, dediacritize, normalize_lemma

STAGES = ("s2s", "lexc", "clust", "simg")
FINALS = ("logp", "rand")
_DISPLAY = {"all": "All", "top": "Top", "s2s": "S2S", "lexc": "LexC", "clust": "Clust",
            "simg": "SimG", "logp": "LogP", "rand": "Rand"}

# stage -> (prediction kind or resource, CLI flag that supplies it)
STAGE_RESOURCES = {
    "top": (PredictionKind.POS_TOPSET, "--predictions pos_topset=PATH"),
    "s2s": (PredictionKind.S2S_LEMMA, "--predictions s2s_lemma=PATH"),
    "lexc": (PredictionKind.LEXC_LPG, "--predictions lexc_lpg=PATH"),
    "clust": (PredictionKind.CLUSTER_ID, "--predictions cluster_id=PATH"),
}

# any candidate beats a candidate whose glosses cannot be embedded
_UNSCORABLE = -2.0


class MissingResource(ValueError):
    def __init__(self, stage: str, flag: str):
        super().__init__(f"pipeline stage '{stage}' needs {flag}")
        self.stage = stage
        self.flag = flag


@dataclass(frozen=True)
class PipelineSpec:
    """One pipeline configuration, e.g. Top+Clust+S2S+LogP.

    ``tagger_mode="sort"`` keeps the whole analyzer set and ranks by
    (tagger score, log probability) instead of filtering on the top POS.
    """

    base: SetKind = SetKind.ALL
    stages: tuple[str, ...] = ()
    final: str = "logp"
    tagger_mode: str = "filter"
    s2s_dediacritized: bool = False
    simg_pooling: str = "max"

    def __post_init__(self):
        object.__setattr__(self, "base", SetKind(self.base))
        object.__setattr__(self, "stages", tuple(self.stages))
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ValueError(f"unknown pipeline stages {unknown}; choose from {STAGES}")
        if len(set(self.stages)) != len(self.stages):
            raise ValueError("a stage kind may appear only once")
        if self.final not in FINALS:
            raise ValueError(f"final selector must be one of {FINALS}")
        if self.tagger_mode not in ("filter", "sort"):
            raise ValueError("tagger_mode must be 'filter' or 'sort'")
        if self.simg_pooling not in ("max", "mean"):
            raise ValueError("simg_pooling must be 'max' or 'mean'")

    @property
    def name(self) -> str:
        parts = [self.base.value, *self.stages, self.final]
        return "+".join(_DISPLAY[p] for p in parts)

    @classmethod
    def from_dict(cls, d: Mapping) -> "PipelineSpec":
        allowed = {"base", "stages", "final", "tagger_mode", "s2s_dediacritized", "simg_pooling"}
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"unknown pipeline keys {sorted(extra)}")
        return cls(**{k: (tuple(v) if k == "stages" else v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"base": self.base.value, "stages": list(self.stages), "final": self.final,
                "tagger_mode": self.tagger_mode, "s2s_dediacritized": self.s2s_dediacritized,
                "simg_pooling": self.simg_pooling}


def load_pipeline(path) -> PipelineSpec:
    with open(path, encoding="utf-8") as f:
        return PipelineSpec.from_dict(json.load(f))


@dataclass
class Resources:
    lexicon: Lexicon
    model: Optional[UnigramModel] = None
    provider: Optional[EmbeddingProvider] = None
    predictions: Mapping[PredictionKind, PredictionFile] = field(default_factory=dict)
    assignments: Optional[Mapping[str, int]] = None
    profile: NormProfile = DEFAULT_PROFILE

    def payload(self, kind: PredictionKind, token: Token):
        pred = self.predictions.get(kind)
        return None if pred is None else pred.get(token.sentence_id, token.index)


def check_resources(spec: PipelineSpec, res: Resources, have_translations: bool = True) -> None:
    """Raise MissingResource naming the first stage whose input is absent."""
    needed = (["top"] if spec.base is SetKind.TOP else []) + list(spec.stages)
    for stage in needed:
        if stage == "simg":
            if not have_translations:
                raise MissingResource("simg", "--translations PATH")
            continue
        kind, flag = STAGE_RESOURCES[stage]
        if kind not in res.predictions:
            raise MissingResource(stage, flag)
        if stage == "clust" and res.assignments is None:
            raise MissingResource("clust", "--clusters PATH")
    if spec.final == "logp" and res.model is None:
        raise MissingResource("logp", "--model PATH")


# ---------------------------------------------------------------------------
# selectors
# ---------------------------------------------------------------------------

def _tie_key(a: Analysis):
    return (a.source_rank, a.key)


def _argmax(candidates: Sequence[Analysis], score) -> Analysis:
    if not candidates:
        raise ValueError("empty candidate set")
    return min(candidates, key=lambda a: (-score(a), *_tie_key(a)))


def select_rand(candidates: CandidateSet, token_index: int) -> Analysis:
    """Deterministic 'random' pick: position ``index mod n`` in source order."""
    if not len(candidates):
        raise ValueError("empty candidate set")
    return candidates.candidates[token_index % len(candidates)]


def select_logp(candidates: CandidateSet, model: UnigramModel, use_tagger_score: bool = False) -> Analysis:
    """Highest (lemma, POS) log probability; ties to lowest source rank, then key.

    With ``use_tagger_score`` the tagger score is the primary sort key.
    """
    if use_tagger_score:
        def score(a):
            return (a.tagger_score or 0.0, logp(model, a.entry.lemma, a.entry.pos))
        return min(candidates.candidates, key=lambda a: (tuple(-x for x in score(a)), *_tie_key(a)))
    return _argmax(candidates.candidates, lambda a: logp(model, a.entry.lemma, a.entry.pos))


def _top_tags(payload) -> tuple[set, float]:
    best = payload[0][1]
    return {tag for tag, s in payload if s == best}, best


def filter_top(candidates: CandidateSet, payload) -> CandidateSet:
    """Keep candidates carrying the tagger's best POS and attach its score.

    Without a payload, or when no candidate has that POS, the set is returned
    unchanged.
    """
    if not payload:
        return candidates
    tags, best = _top_tags(payload)
    kept = [replace(a, tagger_score=best) for a in candidates if a.entry.pos in tags]
    if not kept:
        return candidates
    return CandidateSet(SetKind.TOP, tuple(kept))


def score_with_tagger(candidates: CandidateSet, payload) -> CandidateSet:
    """Attach each candidate's own POS score (0 when the tagger did not list it)."""
    scores = dict(payload or ())
    return CandidateSet(
        SetKind.TOP, tuple(replace(a, tagger_score=scores.get(a.entry.pos, 0.0)) for a in candidates)
    )


def _gloss_vector(provider: EmbeddingProvider, gloss: str):
    words = gloss.split()
    if gloss == NO_GLOSS or not words:
        return None
    return phrase_embedding(provider, words)


def simg_scores(
    candidates: CandidateSet, sentence: Sentence, token_index: int,
    provider: EmbeddingProvider, pooling: str = "max",
) -> list[float]:
    """Cosine between each candidate's glosses and the aligned English words.

    Tokens without alignment are compared with the whole translation.
    """
    if not sentence.translation:
        raise ValueError(f"sentence {sentence.id} has no translation")
    target_words = sentence.aligned_words(token_index) or list(sentence.translation)
    target = phrase_embedding(provider, target_words)
    out = []
    for a in candidates:
        sims = []
        for g in a.entry.glosses:
            vec = _gloss_vector(provider, g)
            if vec is None:
                continue
            try:
                sims.append(cosine(vec, target))
            except EmbeddingError:
                continue
        if not sims:
            out.append(_UNSCORABLE)
        else:
            out.append(max(sims) if pooling == "max" else sum(sims) / len(sims))
    return out


def select_simg(
    candidates: CandidateSet, sentence: Sentence, provider: EmbeddingProvider,
    token_index: int, pooling: str = "max",
) -> Analysis:
    scores = dict(zip(candidates.keys(), simg_scores(candidates, sentence, token_index, provider, pooling)))
    return _argmax(candidates.candidates, lambda a: scores[a.key])


def _lemma_match_key(lemma: str, dediacritized: bool, profile: NormProfile) -> str:
    lemma = normalize_lemma(lemma, profile)
    return dediacritize(lemma) if dediacritized else lemma


def _filter(candidates: CandidateSet, kind: str, payload, assignments=None,
            dediacritized: bool = False, profile: NormProfile = DEFAULT_PROFILE):
    """Returns (subset, fallback_fired)."""
    if kind == "clust" and assignments is None:
        raise ValueError("cluster filtering needs LPG cluster assignments")
    if kind not in ("s2s", "lexc", "clust"):
        raise ValueError(f"unknown filter stage {kind!r}")
    if payload is None:
        return candidates, True
    if kind == "s2s":
        want = _lemma_match_key(payload, dediacritized, profile)
        kept = [a for a in candidates
                if _lemma_match_key(a.entry.lemma, dediacritized, profile) == want]
    elif kind == "lexc":
        kept = [a for a in candidates if a.key == payload]
    else:
        kept = [a for a in candidates if assignments.get(a.key) == payload]
    if not kept:
        return candidates, True
    return candidates.subset(kept), False


def stage_filter(candidates: CandidateSet, kind: str, payload, assignments=None,
                 dediacritized: bool = False, profile: NormProfile = DEFAULT_PROFILE) -> CandidateSet:
    """Narrow the set to candidates agreeing with an external prediction.

    s2s keeps matching lemmas, lexc the predicted LPG key, clust the LPGs in
    the predicted cluster.  Missing payloads and empty results return the
    input unchanged.
    """
    return _filter(candidates, kind, payload, assignments, dediacritized, profile)[0]


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StageTrace:
    stage: str
    n_in: int
    n_out: int
    fallback: bool = False

    def __str__(self):
        return f"{self.stage}:{self.n_in}>{self.n_out}{'!' if self.fallback else ''}"


@dataclass(frozen=True)
class Selection:
    analysis: Analysis
    stage: str
    trace: tuple[StageTrace, ...]
    candidates: tuple[str, ...] = ()  # keys of the original analyzer set

    def trace_str(self) -> str:
        return " ".join(str(t) for t in self.trace)


def run_pipeline(spec: PipelineSpec, token: Token, sentence: Sentence, res: Resources) -> Selection:
    special = class_analysis(token.surface)
    if special is not None:
        stage = "digit" if special.entry.pos == DIGIT_POS else "punct"
        return Selection(special, stage, (StageTrace("class", 1, 1),), (special.key,))

    current = analyze(token.surface, res.lexicon)
    original = tuple(current.keys())
    trace = [StageTrace("analyze", len(current), len(current))]

    if spec.base is SetKind.TOP:
        payload = res.payload(PredictionKind.POS_TOPSET, token)
        n_in = len(current)
        if spec.tagger_mode == "sort":
            current = score_with_tagger(current, payload)
            trace.append(StageTrace("top", n_in, n_in, payload is None))
        else:
            filtered = filter_top(current, payload)
            fallback = filtered.kind is not SetKind.TOP
            current = filtered
            trace.append(StageTrace("top", n_in, len(current), fallback))

    for stage in spec.stages:
        n_in = len(current)
        if stage == "simg":
            if not sentence.translation or res.provider is None:
                trace.append(StageTrace("simg", n_in, n_in, True))
                continue
            scores = simg_scores(current, sentence, token.index, res.provider, spec.simg_pooling)
            best = max(scores)
            current = current.subset([a for a, s in zip(current, scores) if s == best])
            trace.append(StageTrace("simg", n_in, len(current)))
            continue
        kind = STAGE_RESOURCES[stage][0]
        current, fallback = _filter(current, stage, res.payload(kind, token), res.assignments,
                                    spec.s2s_dediacritized, res.profile)
        trace.append(StageTrace(stage, n_in, len(current), fallback))

    n_in = len(current)
    if spec.final == "rand":
        chosen = select_rand(current, token.index)
    else:
        chosen = select_logp(current, res.model,
                             use_tagger_score=spec.base is SetKind.TOP and spec.tagger_mode == "sort")
    trace.append(StageTrace(spec.final, n_in, 1))

    if not res.lexicon.is_known(token.surface):
        label = "backoff"
    elif len(original) == 1:
        label = "unique"
    else:
        label = next((t.stage for t in trace[1:] if t.n_out == 1), spec.final)
    return Selection(chosen, label, tuple(trace), original)


_WORKER: dict = {}


def _init_worker(spec, res):
    _WORKER["spec"] = spec
    _WORKER["res"] = res


def _run_sentence(sentence: Sentence):
    spec, res = _WORKER["spec"], _WORKER["res"]
    return [run_pipeline(spec, tok, sentence, res) for tok in sentence.tokens]


def lemmatize_corpus(spec: PipelineSpec, corpus: Sequence[Sentence], res: Resources,
                     jobs: int = 1) -> dict[tuple[str, int], Selection]:
    """Run the pipeline on every token; results do not depend on ``jobs``."""
    if jobs > 1 and len(corpus) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(spec, res)) as ex:
            per_sentence = list(ex.map(_run_sentence, corpus, chunksize=max(1, len(corpus) // (4 * jobs))))
    else:
        per_sentence = [[run_pipeline(spec, tok, s, res) for tok in s.tokens] for s in corpus]
    out = {}
    for sent, sels in zip(corpus, per_sentence):
        for tok, sel in zip(sent.tokens, sels):
            out[(sent.id, tok.index)] = sel
    return out


def write_trace(path, corpus: Sequence[Sentence], selections: Mapping, header=()) -> None:
    lines = ["# " + h for h in header]
    lines.append("# SENT_ID\tINDEX\tSTAGE\tTRACE")
    for sent in corpus:
        for tok in sent.tokens:
            sel = selections[(sent.id, tok.index)]
            lines.append(f"{sent.id}\t{tok.index}\t{sel.stage}\t{sel.trace_str()}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
