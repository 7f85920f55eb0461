"""``botflow`` command line: one binary, one subcommand per pipeline stage.

Exit status: 0 success, 1 usage error, 2 bad input data, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading
from pathlib import Path

from . import __version__
from .errors import BotflowError, DataError, FoldError

log = logging.getLogger("botflow")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    name, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return name, value


def _spec(kind: str, params):
    from .classifiers import ClassifierSpec

    return ClassifierSpec(kind, dict(params or []))


def _dataset(args):
    from .dataset import load_dataset, read_ip_list
    from .flowcore import NUMERIC_FEATURES

    features = NUMERIC_FEATURES
    if getattr(args, "features", None):
        features = [f.strip() for f in args.features.split(",") if f.strip()]
    elif getattr(args, "features_file", None):
        features = [ln.split("\t")[0].strip() for ln in Path(args.features_file).read_text().splitlines()
                    if ln.strip()]
    ips = read_ip_list(args.infected_ips) if getattr(args, "infected_ips", None) else None
    return load_dataset(args.data, features, ips)


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# subcommands ------------------------------------------------------------

def cmd_extract(args) -> int:
    from .flowcore import write_flows
    from .ingest import AggregatorConfig, DecodeStats, aggregate, read_pcap

    if not Path(args.pcap).exists():
        raise FileNotFoundError(f"no such file: {args.pcap}")
    cfg = AggregatorConfig(idle_timeout=args.idle_timeout, active_timeout=args.active_timeout)
    stats = DecodeStats()
    flows = aggregate(read_pcap(args.pcap, stats), cfg)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        count = write_flows(fh, flows)
    print(f"{count} flows written to {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .flowcore import write_flows
    from .synthetic import synthetic_flows

    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        count = write_flows(fh, synthetic_flows(args.n, args.botnet_fraction, args.seed))
    print(f"{count} flows written to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .classifiers import fit, save_model
    from .detector import register_model
    from .featsel import select_dataset

    ds = _dataset(args)
    if args.top_k:
        ds, _ = select_dataset(ds, args.top_k, seed=args.seed)
    model = fit(_spec(args.kind, args.param), ds, seed=args.seed)
    if args.out:
        save_model(model, args.out)
        print(f"model written to {args.out}")
    if args.models_dir:
        model_id = args.model_id or f"{model.kind.value.lower()}-{Path(args.data).stem}"
        entry = register_model(model, args.models_dir, args.metadata or Path(args.models_dir) / "models.json",
                               model_id)
        print(f"registered {entry.model_id} ({entry.file_name})")
    print(f"trained {model.kind} on {len(ds)} rows in {model.fit_time:.3f}s")
    return EXIT_OK


def cmd_crossval(args) -> int:
    from .metrics import cross_validate

    ds = _dataset(args)
    report = cross_validate(_spec(args.kind, args.param), ds, args.k, args.seed, args.jobs)
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_select(args) -> int:
    from .featsel import format_report, rank_features, select_top_k

    ds = _dataset(args)
    ranked = rank_features(ds, _spec("RandomForest", args.param), seed=args.seed)
    _write(args.out, format_report(ranked))
    keep = select_top_k(ranked, args.top_k)
    if args.keep:
        Path(args.keep).write_text("\n".join(keep) + "\n", encoding="utf-8")
    if args.out not in (None, "-"):
        print(",".join(keep))
    return EXIT_OK


def cmd_optimize(args) -> int:
    from .optimize import (GAConfig, gene_pool, grid_search, load_gene_pools, random_search,
                           reference_grid, run_ga)

    ds = _dataset(args)
    cfg = GAConfig(args.population, args.generations, args.k, args.seed, args.jobs)
    pools = load_gene_pools(args.gene_pools) if args.gene_pools else None
    pool = gene_pool(args.kind, pools)
    if args.method == "ga":
        result = run_ga(args.kind, ds, cfg, pool=pool)
        history = result.to_csv()
        best = json.loads(result.to_json())
    else:
        if args.method == "grid":
            grid = json.loads(Path(args.grid).read_text()) if args.grid else reference_grid(args.kind)
            result = grid_search(args.kind, grid, ds, cfg, cap=args.cap, pool=pool)
        else:
            result = random_search(args.kind, args.n_iter, ds, cfg, pool=pool)
        history = "".join(json.dumps(r) + "\n" for r in result.rows())
        best = {"kind": str(result.best.kind), "best_fitness": result.best_fitness,
                "best": dict(zip([g.name for g in pool], result.best.genes)),
                "combinations": result.combinations}
    if args.history:
        Path(args.history).write_text(history, encoding="utf-8")
    _write(args.out, json.dumps(best, indent=2) + "\n")
    if args.out not in (None, "-"):
        print(f"best fitness {result.best_fitness:.4f}: {best['best']}")
    return EXIT_OK


def cmd_detect(args) -> int:
    from .detector import load_registry, run_detection, stream_serve

    metadata = args.metadata or Path(args.models_dir) / "models.json"
    registry = load_registry(args.models_dir, metadata)
    for s in registry.skipped:
        print(f"skipped {s.model_id}: {s.reason}", file=sys.stderr)
    cancel = threading.Event()
    previous = signal.signal(signal.SIGINT, lambda *_: cancel.set())
    server = stream_serve(args.listen) if args.listen else None
    try:
        source = args.interface if args.interface else args.read
        summary = run_detection(source, registry, args.alert_log, args.flow_log, server,
                                live=bool(args.interface), cancel=cancel)
    finally:
        signal.signal(signal.SIGINT, previous)
        if server is not None:
            server.stop()
    print(json.dumps(summary.as_dict()))
    return EXIT_OK


def cmd_report(args) -> int:
    from .metrics import EvalReport

    for path in args.files:
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = None
        if isinstance(data, dict) and "rows" in data and "spec" in data:
            sys.stdout.write(EvalReport.from_json(text).to_text())
        elif isinstance(data, dict) and "history" in data:
            sys.stdout.write(_history_table(data))
        elif text.startswith("generation,"):
            sys.stdout.write(_csv_history_table(text))
        else:
            raise DataError(f"{path}: not an evaluation report or search history")
        sys.stdout.write("\n")
    return EXIT_OK


def _history_table(data: dict) -> str:
    lines = [f"{data.get('kind', '')} search, best fitness {data['best_fitness']:.4f}",
             f"{'Generation':>10}  {'Best F1':>8}  Genes"]
    for row in data["history"]:
        lines.append(f"{row['generation']:>10}  {row['best_fitness']:>8.4f}  {json.dumps(row['best_genes'])}")
    return "\n".join(lines) + "\n"


def _csv_history_table(text: str) -> str:
    import csv
    import io

    rows = list(csv.DictReader(io.StringIO(text)))
    lines = [f"{'Generation':>10}  {'Best F1':>8}  Genes"]
    for r in rows:
        lines.append(f"{r['generation']:>10}  {float(r['best_fitness']):>8.4f}  {r['best_genes']}")
    return "\n".join(lines) + "\n"


# parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    data = _Parser(add_help=False)
    data.add_argument("data", help=".binetflow training data")
    data.add_argument("--features", help="comma-separated feature columns (default: all 24)")
    data.add_argument("--features-file", help="file whose first column lists the features to use")
    data.add_argument("--infected-ips", help="relabel: file of infected host IPs, one per line")

    spec = _Parser(add_help=False)
    spec.add_argument("--kind", default="RandomForest",
                      help="GaussianNB, DecisionTree, RandomForest, AdaBoost, LinearSVM or KNN")
    spec.add_argument("--param", type=_param, action="append", metavar="NAME=VALUE",
                      help="hyperparameter override (repeatable; VALUE parsed as JSON when possible)")

    parser = _Parser(prog="botflow", description="Flow-based botnet detection toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--jobs", type=int, default=1, help="maximum worker processes (default 1)")
    parser.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    parser.add_argument("--config", help="JSON file of option defaults; flags override it")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("extract", help="convert a pcap into a .binetflow flow file")
    p.add_argument("pcap")
    p.add_argument("out")
    p.add_argument("--idle-timeout", type=float, default=60.0, help="seconds (default 60)")
    p.add_argument("--active-timeout", type=float, default=3600.0, help="seconds (default 3600)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic labelled flow file")
    p.add_argument("out")
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--botnet-fraction", type=float, default=0.05)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[data, spec, common], help="fit a model and save or register it")
    p.add_argument("--out", help="write the serialized model here")
    p.add_argument("--models-dir", help="register the model in this directory")
    p.add_argument("--metadata", help="registry metadata file (default MODELS_DIR/models.json)")
    p.add_argument("--model-id")
    p.add_argument("--top-k", type=int, default=0, help="train on this dataset's top-k RF features")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", parents=[data, spec, common], help="stratified k-fold evaluation")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("select", parents=[data, common], help="rank features by RF importance")
    p.add_argument("--param", type=_param, action="append", metavar="NAME=VALUE",
                   help="RandomForest hyperparameter override")
    p.add_argument("--top-k", type=int, default=15)
    p.add_argument("--out", default="-", help="importance table (default stdout)")
    p.add_argument("--keep", help="write the retained feature names here")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("optimize", parents=[data, common], help="GA, grid or random hyperparameter search")
    p.add_argument("--kind", default="RandomForest")
    p.add_argument("--method", choices=["ga", "grid", "random"], default="ga")
    p.add_argument("--population", type=int, default=10)
    p.add_argument("--generations", type=int, default=10)
    p.add_argument("--k", type=int, default=10, help="folds per fitness evaluation")
    p.add_argument("--n-iter", type=int, default=100, help="random search samples")
    p.add_argument("--grid", help="JSON grid {gene: [values]} (default: reference grid)")
    p.add_argument("--cap", type=int, default=10_000, help="maximum grid combinations")
    p.add_argument("--gene-pools", help="JSON gene pool overrides")
    p.add_argument("--history", help="write per-generation / per-sample rows here")
    p.add_argument("--out", default="-", help="best chromosome JSON (default stdout)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("detect", help="classify flows from a file, pcap or interface")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("-r", "--read", help="pcap or .binetflow file (detected by content)")
    src.add_argument("-i", "--interface", help="capture live from this interface")
    p.add_argument("--models-dir", required=True)
    p.add_argument("--metadata", help="registry metadata file (default MODELS_DIR/models.json)")
    p.add_argument("--alert-log")
    p.add_argument("--flow-log")
    p.add_argument("--listen", metavar="HOST:PORT", help="serve the websocket feed here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("report", help="render saved evaluation reports or search histories")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        config = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    parser.set_defaults(**config.get("global", {}))
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sub in sub_action.choices.items():
        sub.set_defaults(**config.get(name, {}))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except UsageError as exc:
        print(f"botflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FoldError as exc:
        print(f"botflow: error: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, DataError) else EXIT_RUNTIME
    except (DataError, FileNotFoundError) as exc:
        print(f"botflow: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BotflowError, OSError) as exc:
        print(f"botflow: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"botflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
