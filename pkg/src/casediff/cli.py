"""Command-line interface: ``casediff {score,truth,eval,compare,synth}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import baselines, geometry, regression, scp, stats, truth
from .dataset import (
    DataError,
    DifficultyVector,
    load_annotations,
    load_embeddings,
    load_labels,
    load_probabilities,
    load_scores,
    write_annotations,
    write_embeddings,
    write_scores,
)
from .synth import SynthConfig, synth_generate

log = logging.getLogger("casediff")

GEOMETRY_METHODS = ("inv_sim", "inv_softmax", "inv_softmax_norm")
SCP_METHODS = ("scp", "scp_norm")
TREE_METHODS = ("xt_embed", "xt_embed_label")
METHODS = GEOMETRY_METHODS + SCP_METHODS + TREE_METHODS + tuple(baselines.BASELINES)


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pick(vectors: dict, name: str | None, path) -> DifficultyVector:
    if name is not None:
        if name not in vectors:
            raise DataError(f"method {name!r} not found (have: {', '.join(vectors)})", path)
        return vectors[name]
    if len(vectors) != 1:
        raise DataError(f"file holds several methods ({', '.join(vectors)}); choose one", path)
    return next(iter(vectors.values()))


def cmd_score(args) -> int:
    methods = list(dict.fromkeys(args.method))
    needs_emb = [m for m in methods if m not in baselines.BASELINES]
    needs_probs = [m for m in methods if m in baselines.BASELINES]
    results = []

    data = None
    if needs_emb:
        if not args.embeddings:
            raise DataError(f"--embeddings is required for {', '.join(needs_emb)}")
        data = load_embeddings(args.embeddings)
        log.info("class mapping: %s", dict(enumerate(data.class_names)))

    if any(m in GEOMETRY_METHODS for m in methods):
        reference = load_embeddings(args.reference) if args.reference else data
        centroids = geometry.compute_centroids(
            reference, source=str(args.reference or args.embeddings)
        )
        if "inv_sim" in methods:
            results.append(geometry.inverse_similarity(data, centroids))
        if {"inv_softmax", "inv_softmax_norm"} & set(methods):
            soft = geometry.inverse_softmax_similarity(data, centroids)
            if "inv_softmax" in methods:
                results.append(soft)
            if "inv_softmax_norm" in methods:
                results.append(geometry.normalize_per_class(soft, data.labels))

    if any(m in SCP_METHODS for m in methods):
        power = scp.sample_classification_power(data, workers=args.threads)
        if "scp" in methods:
            results.append(power)
        if "scp_norm" in methods:
            results.append(geometry.normalize_per_class(power, data.labels))

    for m in (m for m in methods if m in TREE_METHODS):
        if not args.truth:
            raise DataError(f"--truth is required for {m}")
        target = _pick(load_scores(args.truth), args.truth_method, args.truth)
        subset = data.subset(target.case_ids)
        params = regression.ExtraTreesParams(n_trees=args.trees, min_samples_split=args.min_split)
        results.append(
            regression.cross_val_predict(
                subset, target, m == "xt_embed_label", folds=args.folds, seed=args.seed,
                params=params, stratify=args.stratify, workers=args.threads,
            )
        )

    if needs_probs:
        if not args.probabilities:
            raise DataError(f"--probabilities is required for {', '.join(needs_probs)}")
        probs = load_probabilities(args.probabilities)
        results.extend(baselines.BASELINES[m](probs) for m in needs_probs)

    order = {m: i for i, m in enumerate(methods)}
    results.sort(key=lambda v: order[v.method_name])
    write_scores(results, args.out or sys.stdout)
    return 0


def cmd_truth(args) -> int:
    labels = load_labels(args.labels)
    table = load_annotations(args.annotations, sorted(set(labels.values())))
    annotated = set(table.case_ids())
    true_labels = truth.true_label_names([c for c in labels if c in annotated], labels)
    missing = annotated - set(true_labels)
    if missing:
        raise DataError(f"no true label for case {sorted(missing)[0]!r}", args.labels)
    scale = truth.CertaintyScale.parse(args.scale) if args.scale else truth.CertaintyScale()
    kw = dict(scale=scale, use_certainty=args.certainty, unknown_certainty=args.unknown_certainty)
    vec = truth.aggregate_truth(table, true_labels, **kw)
    write_scores(vec, args.out or sys.stdout)
    if args.report:
        report = {
            "n_cases": len(vec),
            "n_raters": len(table.rater_ids()),
            "use_certainty": args.certainty,
            "scale": list(scale.values),
            "unknown_certainty": args.unknown_certainty,
        }
        if len(table.rater_ids()) >= 2:
            report["leave_one_annotator_out"] = truth.leave_one_annotator_out(table, true_labels, **kw).to_dict()
        else:
            report["leave_one_annotator_out"] = None
        _emit_json(report, args.report)
    return 0


def cmd_eval(args) -> int:
    target = _pick(load_scores(args.truth), args.truth_method, args.truth)
    method = _pick(load_scores(args.scores), args.method, args.scores).aligned_to(target.case_ids)
    res = stats.kendall_tau(target.scores, method.scores)
    _emit_json(
        {
            "method": method.method_name,
            "n": res.n,
            "tau": res.tau,
            "concordance": res.concordance,
            "concordant": res.concordant,
            "discordant": res.discordant,
            "tied_x": res.tied_x,
            "tied_y": res.tied_y,
            "tied_both": res.tied_both,
        },
        args.out,
    )
    return 0


def cmd_compare(args) -> int:
    target = _pick(load_scores(args.truth), args.truth_method, args.truth)
    methods = []
    for path in args.scores:
        for vec in load_scores(path).values():
            if args.methods and vec.method_name not in args.methods:
                continue
            methods.append(vec.aligned_to(target.case_ids))
    if not methods:
        raise DataError("no methods selected")
    report = stats.bootstrap_compare(
        target, methods, replicates=args.replicates, alpha=args.alpha,
        seed=args.seed, workers=args.threads,
    )
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        sys.stdout.write(report.format_table() + "\n")
    else:
        sys.stdout.write(report.to_json() + "\n")
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(
        n_classes=args.classes,
        points_per_class=args.per_class,
        dimension=args.dim,
        concentration=args.concentration,
        rater_count=args.raters,
        coverage=args.coverage,
        seed=args.seed,
    )
    data, table, planted = synth_generate(config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_embeddings(data, out / "embeddings.csv")
    write_annotations(table, out / "annotations.csv")
    write_scores(planted, out / "planted.csv")
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d cases, %d annotations to %s", len(data), len(table), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casediff", description="Estimate human classification difficulty from embeddings."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute difficulty scores")
    p.add_argument("--method", nargs="+", required=True, choices=METHODS)
    p.add_argument("--embeddings", type=Path, help="embeddings.csv to score")
    p.add_argument("--reference", type=Path, help="embeddings.csv defining class centroids")
    p.add_argument("--probabilities", type=Path, help="probabilities.csv for baselines")
    p.add_argument("--truth", type=Path, help="scores.csv of ground-truth difficulty (extra trees)")
    p.add_argument("--truth-method", help="method name inside --truth (default: the only one)")
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--min-split", type=int, default=10)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--stratify", action="store_true", help="stratify folds by class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--out", type=Path, help="output scores.csv (default: stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("truth", help="aggregate annotations into ground-truth difficulty")
    p.add_argument("--annotations", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True, help="CSV with id,label columns")
    p.add_argument("--certainty", action=argparse.BooleanOptionalAction, default=False,
                   help="weight by self-rated certainty")
    p.add_argument("--scale", help="five comma-separated values for very_low..high")
    p.add_argument("--unknown-certainty", action=argparse.BooleanOptionalAction, default=True,
                   help="let 'unknown' answers contribute their certainty")
    p.add_argument("--out", type=Path, help="output scores.csv (default: stdout)")
    p.add_argument("--report", type=Path, help="JSON summary with leave-one-annotator-out taus")
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("eval", help="Kendall's tau of one method against truth")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--method")
    p.add_argument("--truth-method")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="paired bootstrap comparison of methods")
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--truth-method")
    p.add_argument("--scores", type=Path, nargs="+", required=True)
    p.add_argument("--methods", nargs="+", help="restrict to these method names")
    p.add_argument("--replicates", type=int, default=stats.N_REPLICATES)
    p.add_argument("--alpha", type=float, default=stats.ALPHA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, help="write JSON here and print a table")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    defaults = SynthConfig()
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--classes", type=int, default=defaults.n_classes)
    p.add_argument("--per-class", type=int, default=defaults.points_per_class)
    p.add_argument("--dim", type=int, default=defaults.dimension)
    p.add_argument("--concentration", type=float, default=defaults.concentration)
    p.add_argument("--raters", type=int, default=defaults.rater_count)
    p.add_argument("--coverage", type=float, default=defaults.coverage)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (DataError, ValueError, OSError) as e:
        print(f"casediff {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
