"""Command-line entry point.

    lpglem normalize --corpus in.tsv --out out.tsv
    lpglem sync      --corpus gold.tsv --lexicon lex.tsv --out synced.tsv
    lpglem train     --corpus train.tsv --out model.tsv
    lpglem lemmatize --corpus dev.tsv --lexicon lex.tsv --model model.tsv \\
                     --pipeline top_logp.json --predictions pos_topset=top.tsv --out pred.tsv
    lpglem cluster   --corpus train.tsv --lexicon lex.tsv --instance-vectors inst.tsv --ks 2,3,4 --out clusters.tsv
    lpglem eval      --corpus dev.tsv pred_a.tsv pred_b.tsv
    lpglem mcnemar   --corpus dev.tsv pred_a.tsv pred_b.tsv
    lpglem stats     --corpus dev.tsv --lexicon lex.tsv --predictions pos_topset=top.tsv

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .clustering import (
    ClusteringError,
    ccr,
    extend_assignments,
    kmeans,
    lexicon_entries,
    load_cluster_model,
    lpg_embeddings,
    save_cluster_model,
    select_k,
)
from .corpus_io import (
    PredictionKind,
    attach_translations,
    read_annotated,
    read_corpus,
    read_instance_vectors,
    read_predictions,
    read_translations,
    write_annotated,
    write_corpus,
)
from .embeddings import DEFAULT_DIM, EmbeddingProvider, load_vectors
from .evalstats import (
    GRANULARITIES,
    accuracy_row,
    ambiguity_stats,
    correctness,
    format_accuracy,
    format_ambiguity,
    mcnemar,
    supported,
)
from .lexicon import Lexicon, load_lexicon
from .model import load_pos_inventory
from .probmodel import load_model, save_model, train
from .selection import MissingResource, Resources, check_resources, lemmatize_corpus, load_pipeline, write_trace
from .sync import synchronize_corpus
from .translit import NormProfile

log = logging.getLogger("lpglem")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# flags left out of the recorded invocation: they never change the output
_UNRECORDED = {"--jobs", "--out", "--trace", "--report"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def invocation_header(argv: list[str], seed: int) -> list[str]:
    """Recorded command line: file arguments reduced to base names, output and
    worker-count flags dropped, so reruns elsewhere produce identical bytes."""
    parts = []
    skip = False
    for arg in argv:
        if skip:
            skip = False
            continue
        flag = arg.split("=", 1)[0]
        if flag in _UNRECORDED:
            skip = "=" not in arg
            continue
        if not arg.startswith("--"):
            name, sep, value = arg.partition("=")
            if sep and ("/" in value or os.sep in value):
                arg = f"{name}={Path(value).name}"
            elif "/" in arg or os.sep in arg:
                arg = Path(arg).name
        parts.append(arg)
    return [f"lpglem {__version__}: " + " ".join(parts), f"seed={seed}"]


def _profile(args) -> NormProfile:
    return NormProfile(sun_letter_shadda_removal=args.sun_letter_shadda)


def _inventory(args):
    return load_pos_inventory(args.pos_inventory) if args.pos_inventory else None


def _lexicon(args) -> Lexicon:
    return load_lexicon(args.lexicon, _profile(args), _inventory(args))


def _corpus(args):
    return read_corpus(args.corpus, _profile(args), _inventory(args))


def _parse_predictions(items) -> dict:
    out = {}
    for item in items or ():
        kind, sep, path = item.partition("=")
        if not sep or not path:
            raise UsageError(f"--predictions expects KIND=PATH, got {item!r}")
        try:
            kind = PredictionKind(kind)
        except ValueError:
            raise UsageError(
                f"unknown prediction kind {kind!r}; choose from {[k.value for k in PredictionKind]}"
            ) from None
        if kind in out:
            raise UsageError(f"--predictions {kind.value} given twice")
        out[kind] = read_predictions(path, kind)
    return out


def _emit(text: str, path=None, header=()) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("".join(f"# {h}\n" for h in header) + text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_normalize(args, header):
    write_corpus(args.out, _corpus(args), header)


def cmd_sync(args, header):
    synced, report = synchronize_corpus(_corpus(args), _lexicon(args))
    write_corpus(args.out, synced, header)
    _emit(report.to_tsv() if args.tsv else report.to_text(), args.report, header)


def cmd_train(args, header):
    save_model(train(_corpus(args), args.alpha), args.out, header)


def cmd_lemmatize(args, header):
    spec = load_pipeline(args.pipeline)
    lexicon = _lexicon(args)
    predictions = _parse_predictions(args.predictions)
    model = load_model(args.model) if args.model else None
    provider = None
    if args.vectors:
        provider = load_vectors(args.vectors, seed=args.seed)
    elif "simg" in spec.stages:
        provider = EmbeddingProvider(args.dim, seed=args.seed)
    assignments = None
    if args.clusters:
        cluster_model = load_cluster_model(args.clusters)
        if provider is not None:
            cluster_model = extend_assignments(cluster_model, lexicon_entries(lexicon), provider)
        assignments = cluster_model.assignments
    res = Resources(lexicon, model, provider, predictions, assignments, _profile(args))
    try:
        check_resources(spec, res, have_translations=bool(args.translations))
    except MissingResource as e:
        raise UsageError(str(e)) from None

    corpus = _corpus(args)
    if args.translations:
        corpus = attach_translations(corpus, read_translations(args.translations))
    selections = lemmatize_corpus(spec, corpus, res, jobs=args.jobs)
    header = header + [f"pipeline={spec.name}"]
    write_annotated(args.out, corpus, selections, header)
    if args.trace:
        write_trace(args.trace, corpus, selections, header)


def cmd_cluster(args, header):
    corpus = _corpus(args)
    lexicon = _lexicon(args)
    provider = load_vectors(args.vectors, seed=args.seed) if args.vectors else None
    instance = read_instance_vectors(args.instance_vectors) if args.instance_vectors else {}
    if not instance and provider is None:
        raise UsageError("cluster needs --instance-vectors or --vectors")
    points = lpg_embeddings(corpus, instance, provider)
    if not points:
        raise ClusteringError("no tokens with a complete gold LPG to cluster")
    ks = [int(k) for k in args.ks.split(",")] if args.ks else [min(len(points), 2)]
    lines = []
    if len(ks) > 1:
        gloss_provider = provider or EmbeddingProvider(args.dim, seed=args.seed)
        k, model, scores = select_k(points, ks, corpus, lexicon, args.seed, args.tolerance, gloss_provider,
                                    args.ccr_unit)
        for kk in sorted(scores):
            lines.append(f"ccr\tk={kk}\t{scores[kk]:.6f}")
        lines.append(f"selected_k\t{k}")
    else:
        model = kmeans(points, ks[0], args.seed)
        gloss_provider = provider or EmbeddingProvider(args.dim, seed=args.seed)
        model = extend_assignments(model, lexicon_entries(lexicon), gloss_provider)
        try:
            lines.append(f"ccr\tk={ks[0]}\t{ccr(model, corpus, lexicon, args.ccr_unit):.6f}")
        except ClusteringError as e:
            lines.append(f"ccr\tk={ks[0]}\tundefined ({e})")
    lines.append(f"objective\t{model.objective_history[-1]:.6f}" if model.objective_history else "objective\t-")
    save_cluster_model(model, args.out, header)
    _emit("\n".join(lines) + "\n", args.report, header)


def _systems(paths):
    out = {}
    for p in paths:
        name = Path(p).stem
        if name in out:
            name = p
        out[name] = read_annotated(p)
    return out


def cmd_eval(args, header):
    corpus = _corpus(args)
    rows = {name: accuracy_row(preds, corpus) for name, preds in _systems(args.annotated).items()}
    _emit(format_accuracy(rows, args.tsv), args.report, header)


def cmd_mcnemar(args, header):
    corpus = _corpus(args)
    systems = _systems(args.annotated)
    if len(systems) != 2:
        raise UsageError("mcnemar compares exactly two annotated files")
    (name_a, a), (name_b, b) = systems.items()
    lines = [f"# A={name_a}\tB={name_b}", "granularity\tacc_A\tacc_B\tb\tc\tstatistic\tp_value"]
    for g in GRANULARITIES:
        if not supported(corpus, g):
            continue
        ca, cb = correctness(a, corpus, g), correctness(b, corpus, g)
        stat, p = mcnemar(ca, cb)
        n_b = sum(1 for x, y in zip(ca, cb) if x and not y)
        n_c = sum(1 for x, y in zip(ca, cb) if y and not x)
        lines.append(
            f"{g.value}\t{sum(ca) / len(ca):.4f}\t{sum(cb) / len(cb):.4f}\t{n_b}\t{n_c}\t{stat:.6f}\t{p:.6g}"
        )
    _emit("\n".join(lines) + "\n", args.report, header)


def cmd_stats(args, header):
    predictions = _parse_predictions(args.predictions)
    rows = ambiguity_stats(_corpus(args), _lexicon(args), predictions.get(PredictionKind.POS_TOPSET))
    _emit(format_ambiguity(rows, args.tsv), args.report, header)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpglem", description="Lexicon-driven Lemma-POS-Gloss lemmatization toolkit.")
    parser.add_argument("--version", action="version", version=f"lpglem {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--pos-inventory", help="POS tag list (default: bundled inventory, unchecked)")
    common.add_argument("--sun-letter-shadda", action="store_true",
                        help="also strip lemma-initial sun-letter shaddas")
    common.add_argument("--tsv", action="store_true", help="reports as TSV instead of aligned text")
    common.add_argument("--report", help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("normalize", parents=[common], help="normalize gold lemmas of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("sync", parents=[common], help="synchronize gold LPGs with the lexicon")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("train", parents=[common], help="train the unigram (lemma, POS) model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("lemmatize", parents=[common], help="run a selection pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--model")
    p.add_argument("--pipeline", required=True, help="pipeline JSON config")
    p.add_argument("--predictions", action="append", metavar="KIND=PATH")
    p.add_argument("--vectors", help="word vector file for SimG / unknown-LPG assignment")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM, help="hashed fallback dimension without --vectors")
    p.add_argument("--translations")
    p.add_argument("--clusters", help="cluster model file")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="per-token stage trace output")
    p.set_defaults(func=cmd_lemmatize)

    p = sub.add_parser("cluster", parents=[common], help="k-means over LPG embeddings + CCR")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--instance-vectors", help="per-token vectors (SENT_ID, INDEX, floats)")
    p.add_argument("--vectors", help="word vectors for fallback and gloss similarity")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--ks", help="comma-separated candidate k values")
    p.add_argument("--tolerance", type=float, default=0.01, help="CCR slack when picking k")
    p.add_argument("--ccr-unit", choices=("type", "token"), default="type")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", parents=[common], help="accuracy at L / LP / LPG")
    p.add_argument("--corpus", required=True, help="gold corpus")
    p.add_argument("annotated", nargs="+")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mcnemar", parents=[common], help="McNemar test between two systems")
    p.add_argument("--corpus", required=True, help="gold corpus")
    p.add_argument("annotated", nargs=2)
    p.set_defaults(func=cmd_mcnemar)

    p = sub.add_parser("stats", parents=[common], help="ambiguity statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--predictions", action="append", metavar="KIND=PATH")
    p.set_defaults(func=cmd_stats)
    return parser


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        args.func(args, invocation_header(argv, args.seed))
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
