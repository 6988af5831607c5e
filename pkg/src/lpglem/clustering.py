"""K-means over LPG embeddings and the Cluster Compactness Ratio (CCR).

CCR measures how often the competing LPGs of an ambiguous word land in the
same cluster; a cluster filter can only separate them when they do not, so
lower is better.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .embeddings import EmbeddingError, EmbeddingProvider, cosine, phrase_embedding
from .lexicon import Lexicon, analyze, class_analysis, lookup_key
from .model import NO_GLOSS, LpgEntry, Sentence, lpg_key, parse_lpg_key


class ClusteringError(ValueError):
    pass


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: dict[str, int]
    seed: int = 0
    objective_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.k < 1 or len(self.centroids) != self.k:
            raise ClusteringError("centroid count does not match k")
        bad = [key for key, c in self.assignments.items() if not 0 <= c < self.k]
        if bad:
            raise ClusteringError(f"cluster ids out of range for {bad[:3]}")

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def members(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.k)]
        for key in sorted(self.assignments):
            out[self.assignments[key]].append(key)
        return out


def lpg_embeddings(
    corpus: Iterable[Sentence],
    instance_vectors: Mapping[tuple[str, int], np.ndarray],
    provider: Optional[EmbeddingProvider] = None,
) -> dict[str, np.ndarray]:
    """Average the instance vectors of all tokens sharing a gold LPG.

    Only tokens with a complete gold (lemma, POS and glosses) contribute.
    Tokens without an instance vector use the provider's vector for the
    surface form.
    """
    sums: dict[str, np.ndarray] = {}
    counts: Counter = Counter()
    dim = None
    for sent in corpus:
        for tok in sent.tokens:
            if not tok.evaluatable or not tok.gold.is_complete:
                continue
            vec = instance_vectors.get((sent.id, tok.index))
            if vec is None:
                if provider is None:
                    raise ClusteringError(f"no instance vector for {sent.id}:{tok.index}")
                vec = provider.vector(tok.surface)
            vec = np.asarray(vec, dtype=np.float64)
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ClusteringError(
                    f"vector for {sent.id}:{tok.index} has dimension {len(vec)}, expected {dim}"
                )
            key = lpg_key(tok.gold)
            if key in sums:
                sums[key] = sums[key] + vec
            else:
                sums[key] = vec.copy()
            counts[key] += 1
    return {key: sums[key] / counts[key] for key in sorted(sums)}


def _assign(X: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest-centroid labels and squared distances, in bounded memory."""
    n, d = X.shape
    k = len(C)
    chunk = max(1, (1 << 22) // max(1, k * d))
    labels = np.empty(n, dtype=np.int64)
    mind = np.empty(n, dtype=np.float64)
    for start in range(0, n, chunk):
        diff = X[start : start + chunk, None, :] - C[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        labels[start : start + chunk] = np.argmin(dist, axis=1)
        mind[start : start + chunk] = dist[np.arange(len(dist)), labels[start : start + chunk]]
    return labels, mind


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a centre; take any unused one
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return X[chosen].copy()


def kmeans(
    points: Mapping[str, np.ndarray],
    k: int,
    seed: int = 42,
    max_iter: int = 300,
    tol: float = 1e-8,
) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when labels stop changing, the largest centroid move drops below
    ``tol``, or after ``max_iter`` assignment steps.  An emptied cluster is
    re-seeded with the point farthest from its current centroid.
    """
    keys = sorted(points)
    n = len(keys)
    if k < 1 or k > n:
        raise ClusteringError(f"k={k} invalid for {n} points")
    if max_iter < 1 or tol <= 0:
        raise ClusteringError("max_iter must be >= 1 and tol > 0")
    X = np.stack([np.asarray(points[key], dtype=np.float64) for key in keys])
    rng = np.random.default_rng(seed)
    C = _kmeanspp(X, k, rng)

    history: list[float] = []
    labels = None
    for _ in range(max_iter):
        new_labels, mind = _assign(X, C)
        objective = float(mind.sum())
        if history and objective > history[-1] * (1 + 1e-12) + 1e-12:
            raise RuntimeError(f"k-means objective increased: {history[-1]} -> {objective}")
        history.append(objective)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        newC = np.empty_like(C)
        empty = []
        for j in range(k):
            mask = labels == j
            if mask.any():
                newC[j] = X[mask].mean(axis=0)
            else:
                empty.append(j)
        if empty:
            taken = set()
            for j in empty:
                for idx in np.argsort(-mind, kind="stable"):
                    if int(idx) not in taken:
                        taken.add(int(idx))
                        newC[j] = X[idx]
                        break
        shift = float(np.max(np.linalg.norm(newC - C, axis=1)))
        C = newC
        if shift < tol:
            break

    assignments = {key: int(c) for key, c in zip(keys, labels)}
    return ClusterModel(k, C, assignments, seed, history)


def objective(points: Mapping[str, np.ndarray], model: ClusterModel) -> float:
    return float(sum(np.sum((np.asarray(points[key]) - model.centroids[c]) ** 2)
                     for key, c in model.assignments.items() if key in points))


# ---------------------------------------------------------------------------
# Cluster Compactness Ratio
# ---------------------------------------------------------------------------

def ambiguous_sets(corpus: Iterable[Sentence], lexicon: Lexicon, unit: str = "type") -> list[tuple[tuple[str, ...], int]]:
    """Candidate LPG keys of every ambiguous word with its weight.

    ``unit="type"`` counts each word type once; ``unit="token"`` weights it by
    its number of occurrences.
    """
    if unit not in ("type", "token"):
        raise ValueError("unit must be 'type' or 'token'")
    freq: Counter = Counter()
    surface_of: dict[str, str] = {}
    for sent in corpus:
        for tok in sent.tokens:
            if class_analysis(tok.surface) is not None:
                continue
            key = lookup_key(tok.surface)
            freq[key] += 1
            surface_of.setdefault(key, tok.surface)
    out = []
    for key in sorted(freq):
        cands = tuple(analyze(surface_of[key], lexicon).keys())
        if len(cands) >= 2:
            out.append((cands, freq[key] if unit == "token" else 1))
    return out


def ccr_from_sets(assignments: Mapping[str, int], sets: Sequence[tuple[tuple[str, ...], int]]) -> float:
    if not sets:
        raise ClusteringError("no ambiguous words: CCR undefined")
    shared_total = cand_total = 0
    for cands, weight in sets:
        try:
            ids = [assignments[c] for c in cands]
        except KeyError as e:
            raise ClusteringError(f"LPG {e.args[0]!r} has no cluster assignment") from None
        counts = Counter(ids)
        shared_total += weight * sum(1 for c in ids if counts[c] > 1)
        cand_total += weight * len(cands)
    return shared_total / cand_total


def ccr(model: ClusterModel | Mapping[str, int], corpus: Iterable[Sentence], lexicon: Lexicon, unit: str = "type") -> float:
    """Share of ambiguous words' candidate LPGs that share a cluster with a rival."""
    assignments = model.assignments if isinstance(model, ClusterModel) else model
    return ccr_from_sets(assignments, ambiguous_sets(corpus, lexicon, unit))


def select_k(
    points: Mapping[str, np.ndarray],
    candidate_ks: Sequence[int],
    corpus: Sequence[Sentence],
    lexicon: Lexicon,
    seed: int = 42,
    tolerance: float = 0.01,
    provider: Optional[EmbeddingProvider] = None,
    unit: str = "type",
) -> tuple[int, ClusterModel, dict[int, float]]:
    """Smallest k whose CCR is within ``tolerance`` of the best CCR.

    Candidate LPGs that were not clustered are placed with
    :func:`assign_unknown` when a provider is given.  Returns the chosen k,
    its model and the CCR for every candidate.
    """
    if not candidate_ks:
        raise ClusteringError("no candidate k values")
    sets = ambiguous_sets(corpus, lexicon, unit)
    needed = sorted({c for cands, _ in sets for c in cands})
    scores: dict[int, float] = {}
    models: dict[int, ClusterModel] = {}
    for k in sorted(set(candidate_ks)):
        model = kmeans(points, k, seed)
        if provider is not None:
            model = extend_assignments(model, [parse_lpg_key(c) for c in needed], provider)
        models[k] = model
        scores[k] = ccr_from_sets(model.assignments, sets)
    best = min(scores.values())
    chosen = min(k for k, v in scores.items() if v <= best + tolerance)
    return chosen, models[chosen], scores


# ---------------------------------------------------------------------------
# unknown LPGs
# ---------------------------------------------------------------------------

def _gloss_words(entry: LpgEntry) -> list[str]:
    words = [w for g in entry.glosses if g != NO_GLOSS for w in g.split()]
    return words or [entry.lemma]


def gloss_centroids(model: ClusterModel, provider: EmbeddingProvider) -> list[Optional[np.ndarray]]:
    out: list[Optional[np.ndarray]] = []
    for members in model.members():
        if not members:
            out.append(None)
            continue
        vecs = [phrase_embedding(provider, _gloss_words(parse_lpg_key(m))) for m in members]
        out.append(np.mean(np.stack(vecs), axis=0))
    return out


def assign_unknown(
    lpg: LpgEntry,
    model: ClusterModel,
    provider: EmbeddingProvider,
    centroids: Optional[list] = None,
) -> int:
    """Cluster whose mean gloss embedding is most similar to the LPG's glosses."""
    key = lpg_key(lpg)
    if key in model.assignments:
        raise ClusteringError(f"LPG {key!r} is already assigned to cluster {model.assignments[key]}")
    if centroids is None:
        centroids = gloss_centroids(model, provider)
    target = phrase_embedding(provider, _gloss_words(lpg))
    best_id, best_sim = None, -np.inf
    for cid, cen in enumerate(centroids):
        if cen is None:
            continue
        try:
            sim = cosine(target, cen)
        except EmbeddingError:
            continue
        if sim > best_sim:
            best_id, best_sim = cid, sim
    if best_id is None:
        raise ClusteringError("no cluster has a usable gloss centroid")
    return best_id


def extend_assignments(model: ClusterModel, entries: Iterable[LpgEntry], provider: EmbeddingProvider) -> ClusterModel:
    """A copy of ``model`` with every unassigned entry placed by gloss similarity."""
    centroids = gloss_centroids(model, provider)
    added = {}
    for entry in entries:
        key = lpg_key(entry)
        if key not in model.assignments and key not in added:
            added[key] = assign_unknown(entry, model, provider, centroids)
    return ClusterModel(model.k, model.centroids, {**model.assignments, **added}, model.seed,
                        list(model.objective_history))


def lexicon_entries(lexicon: Lexicon) -> list[LpgEntry]:
    seen = {}
    for analyses in lexicon.entries.values():
        for a in analyses:
            seen.setdefault(a.key, a.entry)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_cluster_model(model: ClusterModel, path, header=()) -> None:
    lines = ["# " + h for h in header]
    lines += [f"# k={model.k}\tdim={model.dim}\tseed={model.seed}"]
    for j, c in enumerate(model.centroids):
        lines.append(f"C\t{j}\t" + " ".join(repr(float(x)) for x in c))
    for key in sorted(model.assignments):
        lines.append(f"A\t{key}\t{model.assignments[key]}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_cluster_model(path) -> ClusterModel:
    header = None
    cents: dict[int, list[float]] = {}
    assignments: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if line.startswith("# k="):
                header = dict(item.split("=", 1) for item in line[2:].split("\t"))
                continue
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3 or cols[0] not in ("C", "A"):
                raise ClusteringError(f"{path}:{lineno}: malformed cluster model line")
            if cols[0] == "C":
                cents[int(cols[1])] = [float(x) for x in cols[2].split()]
            else:
                if cols[1] in assignments:
                    raise ClusteringError(f"{path}:{lineno}: duplicate assignment")
                assignments[cols[1]] = int(cols[2])
    if header is None:
        raise ClusteringError(f"{path}: missing '# k=... dim=... seed=...' header")
    k, dim = int(header["k"]), int(header["dim"])
    if sorted(cents) != list(range(k)) or any(len(c) != dim for c in cents.values()):
        raise ClusteringError(f"{path}: centroid lines do not match k={k}, dim={dim}")
    C = np.array([cents[j] for j in range(k)], dtype=np.float64)
    return ClusterModel(k, C, assignments, int(header["seed"]))
