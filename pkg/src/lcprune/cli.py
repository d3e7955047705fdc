"""Batch command-line surface: synth -> score -> select -> eval.

Every command is deterministic given its flags and input files; outputs
are written to temp files and renamed on success. Exit codes: 0 success,
2 usage error, 3 data validation error, 4 numerical precondition error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import clustering, evaluation, feature_store, knn_scoring, selection, synthetic
from .errors import DataValidationError, NumericalError, UsageError

DEFAULT_K_CANDIDATES = (1, 3, 5, 10, 20, 50)
DEFAULT_CLUSTER_CANDIDATES = (8, 12, 16, 20, 24)


def _threads() -> int:
    raw = os.environ.get("LCPRUNE_THREADS", "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"LCPRUNE_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated float list, got {text!r}")


def _write_json(obj: dict, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def cmd_synth(args) -> int:
    spec = synthetic.reference_spec(seed=args.seed, classes=args.classes,
                                    separation=args.separation,
                                    dimension=args.dim)
    cfg = knn_scoring.KnnConfig(k=args.k)
    result = synthetic.prop31_check(spec, args.n, cfg)
    syn = result["synthetic"]
    os.makedirs(args.out, exist_ok=True)
    feature_store.write_pack(syn.pack, args.out)
    dens_path = os.path.join(args.out, "densities.csv")
    tmp = dens_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("index,p,p_class\n")
        for i, (p, pc) in enumerate(zip(syn.true_density, syn.true_class_density)):
            fh.write(f"{i},{p:.17g},{pc:.17g}\n")
    os.replace(tmp, dens_path)
    sv = knn_scoring.ScoreVector(values=result["confidences"], method="lc",
                                 params={"k": args.k, "layers": [0]},
                                 higher_is_easier=True,
                                 pack_digest=syn.pack.digest())
    knn_scoring.save_score_vector(sv, os.path.join(args.out, "confidences.csv"))
    _write_json({"rho": result["rho"], "n": args.n, "k": args.k,
                 "seed": args.seed, "classes": args.classes,
                 "separation": args.separation, "dim": args.dim},
                os.path.join(args.out, "prop31_report.json"))
    print(f"rho={result['rho']:.6f} n={args.n} -> {args.out}")
    return 0


def cmd_score(args) -> int:
    pack = feature_store.load_pack(args.train)
    if args.method == "lc":
        if pack.labels is None:
            raise DataValidationError("lc scoring needs labels in the train pack")
        k = args.k
        if args.k_candidates:
            if not args.val:
                raise UsageError("--k-candidates requires --val")
            val = feature_store.load_pack(args.val)
            tune_layer = pack.num_layers - 1 if args.layer is None else args.layer
            k = knn_scoring.tune_k(pack, val, tune_layer, args.k_candidates)
        if k is None:
            raise UsageError("lc scoring needs --k or --k-candidates")
        cfg = knn_scoring.KnnConfig(k=k, tie_epsilon=args.tie_epsilon)
        sv = knn_scoring.lc_classification_score(pack, cfg, args.layers)
    elif args.method == "lc-reg":
        if pack.perplexities is None:
            raise DataValidationError("lc-reg needs a perplexities matrix in the pack")
        sv = knn_scoring.lc_regression_score(pack.perplexities)
        sv.pack_digest = pack.digest()
    else:
        if pack.probs is None:
            raise DataValidationError(f"{args.method} needs a probs matrix in the pack")
        scorer = {"least-conf": knn_scoring.least_confidence_score,
                  "entropy": knn_scoring.entropy_score,
                  "margin": knn_scoring.margin_score}[args.method]
        sv = scorer(pack.probs)
        sv.pack_digest = pack.digest()
    knn_scoring.save_score_vector(sv, args.out)
    print(f"{args.method}: {len(sv)} scores -> {args.out}")
    return 0


def _keep_direction(keep: str, sv) -> str:
    if keep in ("highest", "lowest"):
        return keep
    if keep == "easiest":
        return "highest" if sv.higher_is_easier else "lowest"
    return "lowest" if sv.higher_is_easier else "highest"


def _select_one(args, pack, sv, eta: float, layer: int,
                k_clusters) -> selection.SelectionResult:
    method = args.method
    if method == "lc":
        return selection.easy_diverse_select(pack, sv, layer, k_clusters,
                                             eta, seed=args.seed)
    if method == "top":
        return selection.top_k_select(sv, eta, keep=_keep_direction(args.keep, sv))
    if method == "random":
        return selection.random_select(pack.n_samples, eta, seed=args.seed)
    if method == "herding":
        return selection.herding_select(pack.layers[layer].data, pack.labels,
                                        eta, per_class=pack.labels is not None)
    if method == "kcg":
        return selection.kcenter_greedy_select(pack.layers[layer].data, eta,
                                               seed=args.seed,
                                               initial=args.initial)
    if method == "cd":
        if pack.probs is None:
            raise DataValidationError("cd needs a probs matrix in the pack")
        return selection.cd_select(pack.probs, eta, seed=args.seed,
                                   initial=args.initial)
    raise UsageError(f"unknown method {method!r}")


def cmd_select(args) -> int:
    pack = feature_store.load_pack(args.train)
    needs_seed = args.method in ("lc", "random") or (
        args.method in ("kcg", "cd") and args.initial is None)
    if needs_seed and args.seed is None:
        raise UsageError(f"method {args.method!r} requires --seed")
    sv = None
    if args.method in ("lc", "top"):
        if not args.scores:
            raise UsageError(f"method {args.method!r} requires --scores")
        sv = knn_scoring.load_score_vector(args.scores)
        if len(sv) != pack.n_samples:
            raise DataValidationError(
                f"score file has {len(sv)} entries, pack has {pack.n_samples}")
    val = feature_store.load_pack(args.val) if args.val else None
    layer = args.layer
    if layer is None:
        if val is not None:
            layer = knn_scoring.select_cluster_layer(
                pack, val, knn_scoring.KnnConfig(k=args.knn_k, exclude_self=False))
        else:
            layer = 0
    k_clusters = args.clusters
    if args.method == "lc" and k_clusters is None:
        if val is None:
            raise UsageError("lc selection needs --clusters, or --val to search "
                             f"the default space {list(DEFAULT_CLUSTER_CANDIDATES)}")
        k_clusters = _search_clusters(args, pack, val, sv, layer)
    etas = args.eta_list if args.eta_list else [args.eta]
    if not etas or etas[0] is None:
        raise UsageError("provide --eta or --eta-list")
    os.makedirs(args.out, exist_ok=True)

    def run(eta: float):
        res = _select_one(args, pack, sv, eta, layer, k_clusters)
        stem = os.path.join(args.out, f"{args.method}_eta{eta:g}")
        selection.save_selection(res, stem + ".json")
        report = evaluation.summarize(res, pack, layer)
        evaluation.save_report(report, stem + "_report.json")
        return res

    with ThreadPoolExecutor(max_workers=min(_threads(), len(etas))) as pool:
        results = list(pool.map(run, etas))
    for eta, res in zip(etas, results):
        print(f"{args.method} eta={eta:g}: kept {len(res)}/{pack.n_samples}")
    return 0


def _search_clusters(args, pack, val, sv, layer: int) -> int:
    """Pick the cluster count whose selection best classifies the val set.

    Training-free proxy for a fine-tuned accuracy comparison: the selected
    subset acts as the KNN reference set for the val queries.
    """
    eta = args.eta_list[0] if args.eta_list else args.eta
    if eta is None:
        raise UsageError("cluster search needs --eta or --eta-list")
    best_k, best_acc = None, -1.0
    for kc in DEFAULT_CLUSTER_CANDIDATES:
        if kc > pack.n_samples:
            continue
        res = selection.easy_diverse_select(pack, sv, layer, kc, eta,
                                            seed=args.seed)
        if len(res) == 0:
            continue
        sub = feature_store.FeaturePack(
            layers=[feature_store.LayerMatrix(
                "sel", pack.layers[layer].data[res.indices])],
            labels=pack.labels[res.indices])
        k_nn = min(args.knn_k, len(res))
        acc = knn_scoring.knn_val_accuracy(
            sub, val, 0, knn_scoring.KnnConfig(k=k_nn, exclude_self=False))
        if acc > best_acc:
            best_k, best_acc = kc, acc
    if best_k is None:
        raise UsageError("no feasible cluster count in the default search space")
    return best_k


def cmd_eval(args) -> int:
    sa = knn_scoring.load_score_vector(args.scores_a)
    sb = knn_scoring.load_score_vector(args.scores_b)
    if len(sa) != len(sb):
        raise DataValidationError(
            f"score files differ in length ({len(sa)} vs {len(sb)})")
    rho = evaluation.spearman(sa.values, sb.values)
    pack = feature_store.load_pack(args.train) if args.train else None
    layer = args.layer if args.layer is not None else 0
    jaccard = {}
    diversity_a, diversity_b = {}, {}
    for eta in (args.eta_list or []):
        ra = selection.top_k_select(sa, eta, keep=_keep_direction("easiest", sa))
        rb = selection.top_k_select(sb, eta, keep=_keep_direction("easiest", sb))
        jaccard[f"{eta:g}"] = evaluation.selection_jaccard(ra, rb)
        if pack is not None and len(ra) >= 2:
            diversity_a[f"{eta:g}"] = clustering.diversity(
                pack.layers[layer].data, ra.indices.tolist())
            diversity_b[f"{eta:g}"] = clustering.diversity(
                pack.layers[layer].data, rb.indices.tolist())
    report = evaluation.EvalReport(
        rho=rho, jaccard_at_budget=jaccard or None,
        metadata={"a": {"method": sa.method, "params": sa.params,
                        "higher_is_easier": sa.higher_is_easier},
                  "b": {"method": sb.method, "params": sb.params,
                        "higher_is_easier": sb.higher_is_easier},
                  "diversity_a": diversity_a, "diversity_b": diversity_b})
    evaluation.save_report(report, args.out)
    print(f"rho={rho:.6f} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcprune",
                                description="Training-free dataset pruning toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sy = sub.add_parser("synth", help="generate a Gaussian-mixture pack and "
                        "run the confidence-vs-density check")
    sy.add_argument("--out", required=True)
    sy.add_argument("--seed", type=int, required=True)
    sy.add_argument("--n", type=int, default=2000)
    sy.add_argument("--k", type=int, default=10)
    sy.add_argument("--classes", type=int, default=2)
    sy.add_argument("--dim", type=int, default=2)
    sy.add_argument("--separation", type=float, default=6.0)
    sy.set_defaults(func=cmd_synth)

    sc = sub.add_parser("score", help="compute a score vector over a pack")
    sc.add_argument("--method", required=True,
                    choices=["lc", "lc-reg", "least-conf", "entropy", "margin"])
    sc.add_argument("--train", required=True, help="train pack manifest")
    sc.add_argument("--val", help="validation pack manifest (for --k-candidates)")
    sc.add_argument("--k", type=int)
    sc.add_argument("--k-candidates", type=_int_list, default=None,
                    help=f"e.g. {','.join(map(str, DEFAULT_K_CANDIDATES))}")
    sc.add_argument("--layers", type=_int_list, default=None,
                    help="0-based layer subset for lc (default: all layers)")
    sc.add_argument("--layer", type=int, help="0-based layer for k tuning")
    sc.add_argument("--tie-epsilon", type=float, default=1e-12)
    sc.add_argument("--out", required=True, help="output CSV path")
    sc.set_defaults(func=cmd_score)

    se = sub.add_parser("select", help="select a budgeted subset")
    se.add_argument("--method", required=True,
                    choices=["lc", "top", "random", "herding", "kcg", "cd"])
    se.add_argument("--train", required=True)
    se.add_argument("--val")
    se.add_argument("--scores", help="score CSV (for lc / top)")
    se.add_argument("--eta", type=float)
    se.add_argument("--eta-list", type=_float_list, default=None)
    se.add_argument("--clusters", type=int)
    se.add_argument("--layer", type=int, help="0-based layer override")
    se.add_argument("--knn-k", type=int, default=10,
                    help="neighbor count for layer/cluster tuning")
    se.add_argument("--seed", type=int)
    se.add_argument("--initial", type=int, help="first index for kcg / cd")
    se.add_argument("--keep", default="easiest",
                    choices=["easiest", "hardest", "highest", "lowest"])
    se.add_argument("--out", required=True, help="output directory")
    se.set_defaults(func=cmd_select)

    ev = sub.add_parser("eval", help="compare two score files")
    ev.add_argument("--scores-a", required=True)
    ev.add_argument("--scores-b", required=True)
    ev.add_argument("--eta-list", type=_float_list, default=None)
    ev.add_argument("--train", help="pack manifest for diversity summaries")
    ev.add_argument("--layer", type=int)
    ev.add_argument("--out", required=True, help="output report JSON path")
    ev.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DataValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
