"""Command-line pipeline: build models, detect the optimal order, run
centralities and prediction, and sweep the full evaluation.

Every run writes its outputs plus a ``manifest_<command>.json`` recording
inputs (with SHA-256 digests), parameters, seeds, and versions.  Reruns
with identical inputs and seeds are byte-identical except for the
manifest timestamp.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import platform
import sys
from importlib import metadata as importlib_metadata
from pathlib import Path

from . import analytics, hon, metrics, multiorder, synth, trajectories
from .errors import DataError, NumericalError
from .graph import parse_edge_list_file, write_edge_list_file


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _package_version():
    try:
        return importlib_metadata.version("honet")
    except importlib_metadata.PackageNotFoundError:
        return "unknown"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_manifest(out_dir, command, params, inputs, outputs):
    doc = {
        "command": command,
        "parameters": params,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(str(o) for o in outputs),
        "versions": {
            "honet": _package_version(),
            "python": platform.python_version(),
        },
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = Path(out_dir) / f"manifest_{command.replace('-', '_')}.json"
    _write_json(path, doc)
    return path


def _write_scores_csv(path, vec):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node,score\n")
        for node, score in vec.sorted_items():
            fh.write(f"{node},{score!r}\n")


def _variant(name):
    v = name.replace("-", "_")
    if v not in ("attributed", "non_attributed"):
        raise UsageError(f"variant must be attributed or non-attributed, got {name!r}")
    return v


def _load_corpus(args):
    if not args.ngram:
        raise UsageError("this command requires --ngram")
    return trajectories.parse_ngram_file(args.ngram)


def _load_or_derive_graph(args, corpus=None):
    if getattr(args, "graph", None):
        return parse_edge_list_file(args.graph)
    if corpus is not None:
        return hon.frequency_graph(corpus)
    raise UsageError("this command requires --graph")


def _model_from_args(args, corpus=None):
    if getattr(args, "model", None):
        return hon.load_model(args.model)
    if corpus is None:
        corpus = _load_corpus(args)
    variant = _variant(args.variant)
    return hon.build_from_paths(
        corpus, args.order, attributed=(variant == "attributed"),
        first_order=hon.frequency_graph(corpus),
    )


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands --------------------------------------------------------------


def _cmd_synth(args):
    out = _out_dir(args)
    inputs = []
    if args.graph:
        g = parse_edge_list_file(args.graph)
        inputs.append(args.graph)
    else:
        g = synth.random_strongly_connected_graph(args.nodes, args.extra_edges, args.seed)
        graph_path = out / "graph.edges"
        write_edge_list_file(g, graph_path)
    pm = synth.random_planted_model(g, args.order, args.skew, args.seed)
    corpus = synth.generate_corpus(pm, args.n_paths, (args.min_len, args.max_len), args.seed)
    corpus_path = out / "corpus.ngram"
    trajectories.write_ngram_file(corpus, corpus_path)
    outputs = [corpus_path] + ([] if args.graph else [out / "graph.edges"])
    _write_json(out / "synth.json", {
        "planted_order": args.order,
        "skew": args.skew,
        "n_paths": args.n_paths,
        "length_range": [args.min_len, args.max_len],
        "truncated_paths": corpus.meta["truncated_paths"],
        "seed": args.seed,
    })
    outputs.append(out / "synth.json")
    _write_manifest(out, "synth", _params(args), inputs, outputs)
    print(f"wrote {corpus_path} ({corpus.total_paths} paths)")
    return 0


def _cmd_stats(args):
    out = _out_dir(args)
    corpus = _load_corpus(args)
    stats = trajectories.path_length_stats(corpus)
    csv_path = out / "stats.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("length,count\n")
        for length, count in stats.histogram.items():
            fh.write(f"{length},{count}\n")
    _write_json(out / "stats.json", {
        "paths": stats.count, "mean_length": stats.mean,
    })
    _write_manifest(out, "stats", _params(args), [args.ngram],
                    [csv_path, out / "stats.json"])
    print(f"paths={stats.count} mean_length={stats.mean:.4f}")
    return 0


def _cmd_build(args):
    out = _out_dir(args)
    corpus = None
    inputs = []
    if args.from_topology:
        g = _load_or_derive_graph(args)
        inputs.append(args.graph)
        model = hon.build_from_topology(g, args.order)
    else:
        corpus = _load_corpus(args)
        inputs.append(args.ngram)
        variant = _variant(args.variant)
        model = hon.build_from_paths(
            corpus, args.order, attributed=(variant == "attributed"),
            first_order=hon.frequency_graph(corpus),
        )
    tag = "attributed" if model.attributed else "non_attributed"
    model_path = out / f"model_k{args.order}_{tag}.json"
    csv_path = out / f"model_k{args.order}_{tag}.csv"
    hon.save_model(model, model_path)
    hon.write_model_csv(model, csv_path)
    _write_manifest(out, "build", _params(args), inputs, [model_path, csv_path])
    print(f"wrote {model_path} ({model.n_nodes} nodes, {model.n_edges} edges)")
    return 0


def _cmd_detect_order(args):
    out = _out_dir(args)
    corpus = _load_corpus(args)
    inputs = [args.ngram]
    if args.graph:
        g = parse_edge_list_file(args.graph)
        inputs.append(args.graph)
    else:
        g = hon.frequency_graph(corpus)
    report = multiorder.order_detection_report(corpus, g, args.max_order, args.epsilon)
    lines = []
    steps_doc = []
    for step in report.steps:
        r = step.result
        lines.append(
            f"k={step.k_null} vs k={step.k_alt}: loglik_k={r.loglik_null!r} "
            f"loglik_k1={r.loglik_alt!r} lambda={r.lambda_!r} "
            f"delta_dof={r.delta_dof} p={r.p_value!r}"
        )
        steps_doc.append({
            "k_null": step.k_null, "k_alt": step.k_alt,
            "loglik_null": r.loglik_null, "loglik_alt": r.loglik_alt,
            "lambda": r.lambda_, "delta_dof": r.delta_dof,
            "p_value": r.p_value, "excluded_paths": r.excluded_paths,
            "significant": step.significant,
        })
    lines.append(f"optimal_order={report.optimal_order}")
    txt_path = out / "detect_order.txt"
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    json_path = out / "detect_order.json"
    _write_json(json_path, {
        "optimal_order": report.optimal_order,
        "max_order": report.max_order,
        "epsilon": report.epsilon,
        "steps": steps_doc,
    })
    _write_manifest(out, "detect-order", _params(args), inputs, [txt_path, json_path])
    print("\n".join(lines))
    return 0


def _cmd_betweenness(args):
    out = _out_dir(args)
    corpus = None if args.model else _load_corpus(args)
    model = _model_from_args(args, corpus)
    weight_mode = args.weight_mode or ("neg_log_prob" if model.attributed else "unit")
    vec = analytics.ho_betweenness(
        model, weight_mode=weight_mode, endpoint_policy=args.endpoint_policy,
        pair_mode=args.pair_mode, threads=args.threads,
    )
    tag = "attributed" if model.attributed else "non_attributed"
    csv_path = out / f"betweenness_k{model.order}_{tag}.csv"
    _write_scores_csv(csv_path, vec)
    json_path = out / f"betweenness_k{model.order}_{tag}.json"
    _write_json(json_path, {
        "order": model.order, "variant": tag, "weight_mode": weight_mode,
        "endpoint_policy": args.endpoint_policy, "pair_mode": args.pair_mode,
        "scores": dict(vec.sorted_items()),
    })
    inputs = [args.model] if args.model else [args.ngram]
    _write_manifest(out, "betweenness", _params(args), inputs, [csv_path, json_path])
    print(f"wrote {csv_path}")
    return 0


def _cmd_pagerank(args):
    out = _out_dir(args)
    corpus = None if args.model else _load_corpus(args)
    model = _model_from_args(args, corpus)
    ho_scores = analytics.ho_pagerank(model, alpha=args.alpha, tol=args.tol,
                                      max_iter=args.max_iter)
    vec = analytics.project_pagerank(ho_scores)
    tag = "attributed" if model.attributed else "non_attributed"
    csv_path = out / f"pagerank_k{model.order}_{tag}.csv"
    _write_scores_csv(csv_path, vec)
    json_path = out / f"pagerank_k{model.order}_{tag}.json"
    _write_json(json_path, {
        "order": model.order, "variant": tag, "alpha": args.alpha, "tol": args.tol,
        "scores": dict(vec.sorted_items()),
    })
    inputs = [args.model] if args.model else [args.ngram]
    _write_manifest(out, "pagerank", _params(args), inputs, [csv_path, json_path])
    print(f"wrote {csv_path}")
    return 0


def _cmd_predict(args):
    out = _out_dir(args)
    corpus = _load_corpus(args)
    model = multiorder.build_multi_order(corpus, args.max_order)
    context = tuple(lab for lab in args.context.split(",") if lab)
    if not context:
        raise UsageError("--context must be a comma-separated node list")
    result = analytics.predict_next(model, context)
    json_path = out / "prediction.json"
    _write_json(json_path, {
        "context": list(result.context),
        "distribution": dict(sorted(result.distribution.items())),
        "top": result.top,
        "used_order": result.used_order,
    })
    _write_manifest(out, "predict", _params(args), [args.ngram], [json_path])
    print(f"top={result.top} used_order={result.used_order}")
    return 0


def _cmd_evaluate(args):
    out = _out_dir(args)
    corpus = _load_corpus(args)
    inputs = [args.ngram]
    if args.graph:
        inputs.append(args.graph)
    truth_traversal = analytics.ground_truth_frequencies(corpus, mode="traversal")
    truth_visitation = analytics.ground_truth_frequencies(corpus, mode="visitation")
    train, test = trajectories.train_test_split(corpus, args.split, args.seed)
    first_order = hon.frequency_graph(corpus)

    rows = []

    def add(k, variant, metric, value):
        rows.append((k, variant, metric, value))

    max_feasible = args.max_order
    for k in range(1, args.max_order + 1):
        try:
            att = hon.build_from_paths(corpus, k, attributed=True, first_order=first_order)
            non = hon.build_from_paths(corpus, k, attributed=False, first_order=first_order)
        except DataError:
            max_feasible = k - 1
            print(f"stopping sweep at k={k - 1}: no order-{k} windows", file=sys.stderr)
            break
        for variant, model, wmode in (
            ("attributed", att, "neg_log_prob"),
            ("non_attributed", non, "unit"),
        ):
            bc = analytics.ho_betweenness(model, weight_mode=wmode, threads=args.threads)
            cmp_bc = metrics.compare_to_ground_truth(truth_traversal, bc)
            add(k, variant, "betweenness_kl", cmp_bc.kl)
            add(k, variant, "betweenness_tau", cmp_bc.tau)
            pr = analytics.project_pagerank(
                analytics.ho_pagerank(model, alpha=args.alpha, tol=args.tol,
                                      max_iter=args.max_iter)
            )
            cmp_pr = metrics.compare_to_ground_truth(truth_visitation, pr)
            add(k, variant, "pagerank_kl", cmp_pr.kl)
            add(k, variant, "pagerank_tau", cmp_pr.tau)
        pred_model = multiorder.build_multi_order(train, k, first_order=first_order)
        samples = analytics.prediction_samples(test, k)
        ev = analytics.evaluate_prediction(pred_model, samples)
        add(k, "attributed", "prediction_cross_entropy", ev.cross_entropy)
        add(k, "attributed", "prediction_accuracy", ev.accuracy)

    csv_path = out / "evaluate.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("k,variant,metric,value\n")
        for k, variant, metric, value in rows:
            fh.write(f"{k},{variant},{metric},{value!r}\n")
    json_path = out / "evaluate.json"
    _write_json(json_path, {
        "max_order": args.max_order,
        "max_feasible_order": max_feasible,
        "split": args.split,
        "seed": args.seed,
        "rows": [
            {"k": k, "variant": v, "metric": mname, "value": val}
            for k, v, mname, val in rows
        ],
    })
    _write_manifest(out, "evaluate", _params(args), inputs, [csv_path, json_path])
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


# -- wiring -------------------------------------------------------------------


def _params(args):
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_common(p, *, ngram=False, graph=False, model=False, order=False,
                max_order=False, variant=False):
    if ngram:
        p.add_argument("--ngram", help="trajectory corpus in ngram format")
    if graph:
        p.add_argument("--graph", help="edge-list file (tab-separated)")
    if model:
        p.add_argument("--model", help="serialized model JSON from `build`")
    if order:
        p.add_argument("--order", "-k", type=int, default=2, help="model order k")
    if max_order:
        p.add_argument("--max-order", "-K", dest="max_order", type=int, default=5,
                       help="maximum order K")
    if variant:
        p.add_argument("--variant", default="attributed",
                       help="attributed | non-attributed")
    p.add_argument("--out", default=".", help="output directory")


def build_parser():
    parser = _Parser(prog="honet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-order synthetic corpus")
    _add_common(p, graph=True, order=True)
    p.add_argument("--nodes", type=int, default=20, help="random graph size if no --graph")
    p.add_argument("--extra-edges", type=int, default=30)
    p.add_argument("--skew", type=float, default=0.3, help="Dirichlet concentration")
    p.add_argument("--n-paths", type=int, default=20000)
    p.add_argument("--min-len", type=int, default=10)
    p.add_argument("--max-len", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("stats", help="path-length summary of a corpus")
    _add_common(p, ngram=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("build", help="construct and serialize one model")
    _add_common(p, ngram=True, graph=True, order=True, variant=True)
    p.add_argument("--from-topology", action="store_true",
                   help="build from graph connectivity instead of trajectories")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("detect-order", help="likelihood-ratio optimal order")
    _add_common(p, ngram=True, graph=True, max_order=True)
    p.add_argument("--epsilon", type=float, default=0.01, help="significance level")
    p.set_defaults(func=_cmd_detect_order)

    p = sub.add_parser("betweenness", help="higher-order betweenness centrality")
    _add_common(p, ngram=True, model=True, order=True, variant=True)
    p.add_argument("--weight-mode", choices=["neg_log_prob", "unit"], default=None)
    p.add_argument("--endpoint-policy", choices=["exclude", "include"], default="exclude")
    p.add_argument("--pair-mode", choices=["ho", "first_order"], default="ho")
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.set_defaults(func=_cmd_betweenness)

    p = sub.add_parser("pagerank", help="higher-order PageRank, projected")
    _add_common(p, ngram=True, model=True, order=True, variant=True)
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100000)
    p.set_defaults(func=_cmd_pagerank)

    p = sub.add_parser("predict", help="next-step distribution for one context")
    _add_common(p, ngram=True, max_order=True)
    p.add_argument("--context", required=True, help="comma-separated node labels")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="full sweep: centralities + prediction over k")
    _add_common(p, ngram=True, graph=True, max_order=True)
    p.add_argument("--split", type=float, default=0.5, help="train fraction")
    p.add_argument("--seed", type=int, default=42, help="split seed")
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100000)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: code=1 kind=UsageError msg={exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error: code=3 kind={type(exc).__name__} msg={exc}", file=sys.stderr)
        return 3
    except (DataError, FileNotFoundError) as exc:
        print(f"error: code=2 kind={type(exc).__name__} msg={exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
