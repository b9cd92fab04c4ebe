"""Command-line front door.

Subcommands: build, train, eval, sweep, predict, gen-planted.
Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
Flags override values from an optional JSON config file; the effective
configuration is echoed into the output directory as config.json.
`CAPGRAPH_SEED` serves as the global seed fallback when --seed is absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError
from .features import EmbeddingConfig, TsneConfig, load_matrix, save_matrix
from .graph import (
    Graph,
    ServiceCategory,
    Split,
    SplitAssignment,
    build_from_corpus,
    load_corpus,
    load_graph,
    mask_target,
    write_graph_files,
)
from .harness import (
    DEFAULT_OS_GRID,
    DEFAULT_RATIO_GRID,
    MethodSpec,
    MetricReport,
    PipelineConfig,
    PlantedDatasetSpec,
    SweepSpec,
    generate_planted_dataset,
    results_rows,
    run_link,
    run_single,
    sweep,
    write_results_csv,
    write_summary_json,
)
from .metrics import auc_pr, auc_roc
from .models import (
    TrainConfig,
    forward,
    load_checkpoint,
    predict_labels,
    save_checkpoint,
)
from .seng import SengConfig, write_audit_file

METRICS_HEADER = [
    "dataset", "method", "axis", "value", "repeat",
    "auc_roc", "auc_pr", "seed", "epochs_run",
]

_METHOD_FLAGS = {
    "plain": (False, False),
    "seng": (True, False),
    "fa": (False, True),
    "sf": (True, True),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Configuration: documented defaults, JSON file, then flags.
# ---------------------------------------------------------------------------

DEFAULTS: dict[str, object] = {
    "seed": 0,
    "ratios": [0.8, 0.1, 0.1],
    "seng": {
        "oversampling_scale": 1.0,
        "ratio_threshold": 0.7,
        "alpha_choices": [2, 3, 4],
        "literal_count_formula": False,
    },
    "embedding": {"dim": 64, "epochs": 40, "learning_rate": 0.025, "negatives": 5},
    "tsne": {"perplexity": None, "iterations": 500, "learning_rate": 200.0},
    "train": {
        "learning_rate": 0.01,
        "max_epochs": 415,
        "patience": 50,
        "d_hidden": 16,
        "threshold": 0.5,
        "fanout": None,
        "head_relu": False,
        "head_mean": False,
    },
}

_FLAG_PATHS = {
    "seed": ("seed",),
    "os": ("seng", "oversampling_scale"),
    "ratio_threshold": ("seng", "ratio_threshold"),
    "alpha_choices": ("seng", "alpha_choices"),
    "literal_count": ("seng", "literal_count_formula"),
    "embed_dim": ("embedding", "dim"),
    "embed_epochs": ("embedding", "epochs"),
    "embed_lr": ("embedding", "learning_rate"),
    "negatives": ("embedding", "negatives"),
    "perplexity": ("tsne", "perplexity"),
    "tsne_iters": ("tsne", "iterations"),
    "tsne_lr": ("tsne", "learning_rate"),
    "lr": ("train", "learning_rate"),
    "max_epochs": ("train", "max_epochs"),
    "patience": ("train", "patience"),
    "hidden": ("train", "d_hidden"),
    "threshold": ("train", "threshold"),
    "fanout": ("train", "fanout"),
    "head_relu": ("train", "head_relu"),
    "head_mean": ("train", "head_mean"),
}


def _add_pipeline_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="JSON config file mirroring the pipeline settings")
    sub.add_argument("--seed", type=int, help="global seed (default: $CAPGRAPH_SEED or 0)")
    sub.add_argument("--os", type=float, dest="os", help="SENG oversampling scale (default: 1.0)")
    sub.add_argument("--ratio-threshold", type=float,
                     help="skip SENG when the training imbalance ratio exceeds this (default: 0.7)")
    sub.add_argument("--alpha-choices", type=str,
                     help="comma list of SENG bag sizes from {2,3,4} (default: 2,3,4)")
    sub.add_argument("--literal-count", action="store_const", const=True, default=None,
                     help="use the literal (1+OS)*|c2| synthetic-node count (default: off)")
    sub.add_argument("--embed-dim", type=int, help="paragraph-vector width (default: 64)")
    sub.add_argument("--embed-epochs", type=int, help="paragraph-vector epochs (default: 40)")
    sub.add_argument("--embed-lr", type=float, help="paragraph-vector learning rate (default: 0.025)")
    sub.add_argument("--negatives", type=int, help="negative samples per word (default: 5)")
    sub.add_argument("--perplexity", type=float, help="t-SNE perplexity (default: min(30,(n-1)/3))")
    sub.add_argument("--tsne-iters", type=int, help="t-SNE iterations (default: 500)")
    sub.add_argument("--tsne-lr", type=float, help="t-SNE learning rate (default: 200)")
    sub.add_argument("--lr", type=float, help="classifier learning rate (default: 0.01)")
    sub.add_argument("--max-epochs", type=int, help="maximum training epochs (default: 415)")
    sub.add_argument("--patience", type=int, help="early-stop patience on validation AUC-ROC (default: 50)")
    sub.add_argument("--hidden", type=int, help="hidden width (default: 16)")
    sub.add_argument("--threshold", type=float, help="classification threshold (default: 0.5)")
    sub.add_argument("--fanout", type=int, help="neighbor sample cap (default: full neighborhood)")
    sub.add_argument("--head-relu", action="store_const", const=True, default=None,
                     help="gate the classification head with a ReLU before the sigmoid (default: off)")
    sub.add_argument("--head-mean", action="store_const", const=True, default=None,
                     help="mean-normalize the head's neighbor aggregation instead of summing (default: off)")


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def effective_config(args: argparse.Namespace) -> dict:
    config = json.loads(json.dumps(DEFAULTS))  # deep copy
    path = getattr(args, "config", None)
    if path is not None:
        try:
            file_cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
        config = _merge(config, file_cfg)
    env_seed = os.environ.get("CAPGRAPH_SEED")
    if env_seed is not None and getattr(args, "seed", None) is None:
        try:
            config["seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"CAPGRAPH_SEED must be an integer, got {env_seed!r}") from None
    for flag, keys in _FLAG_PATHS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "alpha_choices":
            value = [int(tok) for tok in str(value).split(",") if tok]
        node = config
        for key in keys[:-1]:
            node = node[key]
        node[keys[-1]] = value
    return config


def pipeline_from_config(config: dict) -> PipelineConfig:
    try:
        seng = SengConfig(
            oversampling_scale=float(config["seng"]["oversampling_scale"]),
            ratio_threshold=float(config["seng"]["ratio_threshold"]),
            alpha_choices=tuple(int(a) for a in config["seng"]["alpha_choices"]),
            seed=int(config["seed"]),
            literal_count_formula=bool(config["seng"]["literal_count_formula"]),
        )
        embedding = EmbeddingConfig(
            dim=int(config["embedding"]["dim"]),
            epochs=int(config["embedding"]["epochs"]),
            learning_rate=float(config["embedding"]["learning_rate"]),
            negatives=int(config["embedding"]["negatives"]),
        )
        perplexity = config["tsne"]["perplexity"]
        tsne_cfg = TsneConfig(
            perplexity=None if perplexity is None else float(perplexity),
            iterations=int(config["tsne"]["iterations"]),
            learning_rate=float(config["tsne"]["learning_rate"]),
        )
        fanout = config["train"]["fanout"]
        train = TrainConfig(
            learning_rate=float(config["train"]["learning_rate"]),
            max_epochs=int(config["train"]["max_epochs"]),
            patience=int(config["train"]["patience"]),
            d_hidden=int(config["train"]["d_hidden"]),
            threshold=float(config["train"]["threshold"]),
            fanout=None if fanout is None else int(fanout),
            head_relu=bool(config["train"]["head_relu"]),
            head_mean=bool(config["train"]["head_mean"]),
            seed=int(config["seed"]),
        )
        ratios = tuple(float(r) for r in config["ratios"])
        if len(ratios) != 3:
            raise UsageError("ratios must list three values")
        return PipelineConfig(ratios=ratios, seng=seng, embedding=embedding, tsne=tsne_cfg, train=train)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _method_spec(args: argparse.Namespace) -> MethodSpec:
    use_seng, use_fa = _METHOD_FLAGS[args.method]
    task = getattr(args, "task", "node")
    if task == "link" and use_seng:
        raise UsageError("--method seng/sf applies to node classification; link prediction supports plain/fa")
    return MethodSpec(use_seng=use_seng, use_fa=use_fa, encoder=args.encoder, task=task)


def _echo_config(out_dir: Path, config: dict, extra: dict) -> None:
    payload = dict(config)
    payload.update(extra)
    (out_dir / "config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_metrics_csv(path: Path, rows: list[dict[str, object]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_HEADER)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_build(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.corpus is not None:
        if args.services is None:
            raise UsageError("--corpus requires --services")
        docs = load_corpus(args.corpus)
        services = []
        categories = {c.value: c for c in ServiceCategory}
        with Path(args.services).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2:
                    raise DataError(f"services file line {lineno}: expected 'name<TAB>category'")
                name, category = parts
                if category not in categories:
                    raise DataError(f"services file line {lineno}: unknown category {category!r}")
                services.append((name, categories[category]))
        service_edges = []
        if args.service_edges is not None:
            with Path(args.service_edges).open(encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    parts = line.rstrip("\n").split("\t")
                    if len(parts) != 2:
                        raise DataError(f"service-edges file line {lineno}: expected 'name<TAB>name'")
                    service_edges.append((parts[0], parts[1]))
        graph = build_from_corpus(docs, services, service_edges)
    elif args.nodes is not None and args.edges is not None:
        graph = load_graph(args.nodes, args.edges)
    else:
        raise UsageError("provide --corpus/--services or --nodes/--edges")
    write_graph_files(graph, out_dir / "nodes.tsv", out_dir / "edges.tsv")
    print(f"nodes\t{graph.num_nodes}")
    print(f"edges\t{graph.num_edges}")
    return 0


def _metric_rows(dataset: str, method: MethodSpec, report, axis: str = "-", value: str = "-") -> list[dict]:
    rows = []
    for i, rep in enumerate(report.per_repeat):
        rows.append(
            {
                "dataset": dataset,
                "method": method.name,
                "axis": axis,
                "value": value,
                "repeat": i,
                "auc_roc": repr(rep.auc_roc),
                "auc_pr": repr(rep.auc_pr),
                "seed": rep.seed,
                "epochs_run": rep.epochs_run,
            }
        )
    return rows


def cmd_train(args: argparse.Namespace) -> int:
    config = effective_config(args)
    pipeline = pipeline_from_config(config)
    method = _method_spec(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    graph = load_graph(args.nodes, args.edges)
    task = mask_target(graph, args.target)
    seed = int(config["seed"])
    repeats = args.repeats

    _echo_config(out_dir, config, {
        "command": "train", "target": args.target, "method": args.method,
        "encoder": args.encoder, "task": getattr(args, "task", "node"), "repeats": repeats,
    })

    if method.task == "link":
        results = [run_link(task, method, pipeline, seed + r) for r in range(repeats)]
        report = MetricReport.from_repeats(results)
    else:
        artifacts = run_single(task, method, pipeline, seed)
        results = [artifacts.result]
        for r in range(1, repeats):
            results.append(run_single(task, method, pipeline, seed + r).result)
        report = MetricReport.from_repeats(results)

        write_graph_files(artifacts.aug.graph, out_dir / "nodes.tsv", out_dir / "edges.tsv")
        save_matrix(artifacts.features.features, out_dir / "features.bin")
        if artifacts.features.f1 is not None:
            save_matrix(artifacts.features.f1, out_dir / "f1.bin")
            save_matrix(artifacts.features.f2, out_dir / "f2.bin")
        save_checkpoint(artifacts.params, out_dir / "checkpoint.bin")
        if artifacts.aug.num_synthetic:
            write_audit_file(artifacts.aug, out_dir / "seng_audit.tsv")
        with (out_dir / "assignment.tsv").open("w", encoding="utf-8") as fh:
            for j in range(artifacts.aug.graph.num_nodes):
                split_name = artifacts.aug.split.assignment[j].value
                fh.write(f"{j}\t{split_name}\t{int(artifacts.aug.labels[j])}\n")
        with (out_dir / "training_log.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "valid_auc"])
            for entry in artifacts.log:
                writer.writerow([entry.epoch, repr(entry.train_loss), repr(entry.valid_auc)])

    _write_metrics_csv(out_dir / "metrics.csv", _metric_rows(args.target, method, report))
    (out_dir / "report.json").write_text(
        json.dumps(
            {
                "dataset": args.target,
                "method": method.name,
                "auc_roc": report.auc_roc,
                "auc_pr": report.auc_pr,
                "repeats": report.repeats,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"{method.name}\tauc_roc\t{report.auc_roc:.4f}\tauc_pr\t{report.auc_pr:.4f}")
    return 0


def _load_run_dir(run_dir: Path) -> tuple[Graph, np.ndarray, object, dict, np.ndarray, SplitAssignment]:
    for name in ("nodes.tsv", "edges.tsv", "features.bin", "checkpoint.bin", "assignment.tsv", "config.json"):
        if not (run_dir / name).exists():
            raise DataError(f"run directory {run_dir} is missing {name}")
    graph = load_graph(run_dir / "nodes.tsv", run_dir / "edges.tsv")
    features = load_matrix(run_dir / "features.bin")
    params = load_checkpoint(run_dir / "checkpoint.bin")
    config = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
    if features.shape[0] != graph.num_nodes:
        raise DataError(
            f"features/graph mismatch: {features.shape[0]} rows vs {graph.num_nodes} nodes"
        )
    if params.input_dim != features.shape[1]:  # type: ignore[union-attr]
        raise DataError(
            f"checkpoint/feature mismatch: model expects {params.input_dim} dims,"  # type: ignore[union-attr]
            f" features carry {features.shape[1]}"
        )
    labels = np.zeros(graph.num_nodes, dtype=np.int64)
    assignment: dict[int, Split] = {}
    splits = {s.value: s for s in Split}
    with (run_dir / "assignment.tsv").open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"assignment.tsv line {lineno}: expected 3 fields")
            j, split_name, label = int(parts[0]), parts[1], int(parts[2])
            if split_name not in splits:
                raise DataError(f"assignment.tsv line {lineno}: unknown split {split_name!r}")
            assignment[j] = splits[split_name]
            labels[j] = label
    return graph, features, params, config, labels, SplitAssignment(assignment, int(config["seed"]))


def cmd_eval(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    graph, features, params, config, labels, split = _load_run_dir(run_dir)
    probs, _ = forward(features, graph.dense_adjacency(), params)  # type: ignore[arg-type]
    test_ids = np.array(split.test_ids, dtype=np.int64)
    roc = auc_roc(probs[test_ids], labels[test_ids])
    pr = auc_pr(probs[test_ids], labels[test_ids])
    payload = {"auc_roc": roc, "auc_pr": pr, "test_nodes": int(test_ids.size)}
    (run_dir / "eval.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"auc_roc\t{roc:.4f}\tauc_pr\t{pr:.4f}\ttest_nodes\t{test_ids.size}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = effective_config(args)
    pipeline = pipeline_from_config(config)
    method = _method_spec(args)
    if args.axis == "os" and not method.use_seng:
        raise UsageError("OS sweep requires a SENG-enabled method (seng or sf)")
    if args.grid is not None:
        try:
            values = tuple(float(tok) for tok in args.grid.split(",") if tok)
        except ValueError:
            raise UsageError(f"bad grid {args.grid!r}") from None
        if not values:
            raise UsageError("sweep grid is empty")
    else:
        values = DEFAULT_OS_GRID if args.axis == "os" else DEFAULT_RATIO_GRID
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    graph = load_graph(args.nodes, args.edges)
    task = mask_target(graph, args.target)
    spec = SweepSpec(axis=args.axis, values=values, repeats=args.repeats, base_seed=int(config["seed"]))
    cells = sweep(task, method, spec, pipeline)

    _echo_config(out_dir, config, {
        "command": "sweep", "target": args.target, "method": args.method,
        "encoder": args.encoder, "axis": args.axis,
        "grid": list(values), "repeats": args.repeats,
    })
    rows = results_rows(args.target, method, args.axis, cells)
    write_results_csv(out_dir / "results.csv", rows)
    write_summary_json(out_dir / "summary.json", args.target, method, args.axis, cells)
    for cell in cells:
        print(f"{args.axis}\t{cell.value}\tauc_roc\t{cell.report.auc_roc:.4f}\tauc_pr\t{cell.report.auc_pr:.4f}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    graph, features, params, config, _, _ = _load_run_dir(run_dir)
    threshold = args.threshold if args.threshold is not None else float(config["train"]["threshold"])
    node_id = graph.find_manufacturer(args.name)
    if node_id is None:
        raise DataError(f"unknown manufacturer {args.name!r}")
    probs, _ = forward(features, graph.dense_adjacency(), params)  # type: ignore[arg-type]
    label = int(predict_labels(probs, threshold)[node_id])
    print(f"{args.name}\t{probs[node_id]:.6f}\t{label}")
    return 0


def cmd_gen_planted(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed
    if seed is None:
        env_seed = os.environ.get("CAPGRAPH_SEED")
        seed = int(env_seed) if env_seed is not None else 0
    spec = PlantedDatasetSpec(
        n_manufacturers=args.manufacturers,
        n_services_per_category=args.services_per_category,
        n_clusters=args.clusters,
        capable_fraction=args.capable_fraction,
        signal=args.signal,
        noise=args.noise,
        seed=seed,
    )
    graph, target = generate_planted_dataset(spec)
    write_graph_files(graph, out_dir / "nodes.tsv", out_dir / "edges.tsv")
    meta = {
        "target": target,
        "n_manufacturers": spec.n_manufacturers,
        "n_services_per_category": spec.n_services_per_category,
        "n_clusters": spec.n_clusters,
        "capable_fraction": spec.capable_fraction,
        "signal": spec.signal,
        "noise": spec.noise,
        "seed": spec.seed,
        "nodes": graph.num_nodes,
        "edges": graph.num_edges,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"target\t{target}")
    print(f"nodes\t{graph.num_nodes}")
    print(f"edges\t{graph.num_edges}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly and entry point.
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="capgraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build canonical graph files from a corpus or node/edge files")
    p_build.add_argument("--corpus", type=Path, help="manufacturer corpus: name<TAB>document per line")
    p_build.add_argument("--services", type=Path, help="service vocabulary: name<TAB>category per line")
    p_build.add_argument("--service-edges", type=Path, help="service-service edges: name<TAB>name per line")
    p_build.add_argument("--nodes", type=Path, help="existing node file to canonicalize")
    p_build.add_argument("--edges", type=Path, help="existing edge file to canonicalize")
    p_build.add_argument("--out", type=Path, required=True, help="output directory")
    p_build.set_defaults(func=cmd_build)

    p_train = sub.add_parser("train", help="mask a target, train a classifier, write artifacts")
    p_train.add_argument("--nodes", type=Path, required=True, help="node file")
    p_train.add_argument("--edges", type=Path, required=True, help="edge file")
    p_train.add_argument("--target", required=True, help="target service name to mask and predict")
    p_train.add_argument("--method", choices=sorted(_METHOD_FLAGS), default="sf",
                         help="ablation: plain, seng, fa, or sf (default: sf)")
    p_train.add_argument("--encoder", choices=["graphsage", "gcn"], default="graphsage",
                         help="GNN encoder (default: graphsage)")
    p_train.add_argument("--task", choices=["node", "link"], default="node",
                         help="node classification or link prediction (default: node)")
    p_train.add_argument("--repeats", type=int, default=1, help="averaging repeats (default: 1)")
    p_train.add_argument("--out", type=Path, required=True, help="output directory")
    _add_pipeline_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="re-evaluate a saved training run directory")
    p_eval.add_argument("--run-dir", type=Path, required=True, help="directory written by train")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="grid sweep over the OS or imbalance-ratio axis")
    p_sweep.add_argument("--nodes", type=Path, required=True, help="node file")
    p_sweep.add_argument("--edges", type=Path, required=True, help="edge file")
    p_sweep.add_argument("--target", required=True, help="target service name")
    p_sweep.add_argument("--method", choices=sorted(_METHOD_FLAGS), default="sf",
                         help="ablation method (default: sf)")
    p_sweep.add_argument("--encoder", choices=["graphsage", "gcn"], default="graphsage",
                         help="GNN encoder (default: graphsage)")
    p_sweep.add_argument("--axis", choices=["os", "ratio"], required=True, help="sweep axis")
    p_sweep.add_argument("--grid", help="comma list of grid values "
                                        "(default: 0.2,0.4,0.6,0.8,1.0,1.2 for os; 0.1,0.2,0.4,0.5866 for ratio)")
    p_sweep.add_argument("--repeats", type=int, default=3, help="repeats per cell (default: 3)")
    p_sweep.add_argument("--out", type=Path, required=True, help="output directory")
    _add_pipeline_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep, task="node")

    p_pred = sub.add_parser("predict", help="score one manufacturer with a saved run")
    p_pred.add_argument("--run-dir", type=Path, required=True, help="directory written by train")
    p_pred.add_argument("--name", required=True, help="manufacturer name")
    p_pred.add_argument("--threshold", type=float, help="label threshold (default: from run config, 0.5)")
    p_pred.set_defaults(func=cmd_predict)

    p_gen = sub.add_parser("gen-planted", help="generate a planted benchmark dataset")
    p_gen.add_argument("--manufacturers", type=int, default=200, help="manufacturer count (default: 200)")
    p_gen.add_argument("--services-per-category", type=int, default=10,
                       help="services per category (default: 10)")
    p_gen.add_argument("--clusters", type=int, default=4, help="service cluster count (default: 4)")
    p_gen.add_argument("--capable-fraction", type=float, default=0.2,
                       help="fraction of capable manufacturers (default: 0.2)")
    p_gen.add_argument("--signal", type=float, default=0.9,
                       help="capable-to-cluster link probability (default: 0.9)")
    p_gen.add_argument("--noise", type=float, default=0.05, help="noise edge rate (default: 0.05)")
    p_gen.add_argument("--seed", type=int, help="generator seed (default: $CAPGRAPH_SEED or 0)")
    p_gen.add_argument("--out", type=Path, required=True, help="output directory")
    p_gen.set_defaults(func=cmd_gen_planted)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
