"""Command-line entry point.

Subcommands map one to one onto library operations: ``index``, ``query``,
``train``, ``eval``, ``sweep``, and ``serve``.  The working state (vector
store, weight file, manifest) lives in one directory, taken from
``--home``, the ``EVERYSEARCH_HOME`` environment variable, or
``~/.everysearch`` in that order.

Exit codes: 0 success, 1 usage error, 2 runtime error.  ``--json`` turns
result printing into machine-readable JSON on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from . import embedder, evalkit, trainer
from .engine import ThresholdSchedule, merge_results, search, standard_search
from .errors import EverysearchError
from .indexer import IndexConfig, ProjectIndexer, load_manifest_items
from .server import AppState, SearchServer, ServerConfig, done_payload
from .store import open_or_create

STORE_FILE = "store.embs"
WEIGHTS_FILE = "weights.embw"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _home(args) -> str:
    home = args.home or os.environ.get("EVERYSEARCH_HOME") or os.path.expanduser("~/.everysearch")
    os.makedirs(home, exist_ok=True)
    return home


def _store_path(args) -> str:
    return os.path.join(_home(args), STORE_FILE)


def _weights_path(args) -> str:
    return args.weights or os.path.join(_home(args), WEIGHTS_FILE)


def _load_or_init_weights(args) -> embedder.ModelWeights:
    path = _weights_path(args)
    if os.path.exists(path):
        return embedder.load_weights(path)
    weights = embedder.default_weights()
    embedder.save_weights(weights, path)
    return weights


def _open_state(args):
    weights = _load_or_init_weights(args)
    store = open_or_create(_store_path(args), weights.out_dim)
    return store, weights


def _schedule(args) -> ThresholdSchedule:
    return ThresholdSchedule(base=args.base, step=args.step, step_every=args.step_every)


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base", type=float, default=0.30, help="starting similarity threshold")
    p.add_argument("--step", type=float, default=0.05, help="threshold increase per step")
    p.add_argument("--step-every", type=int, default=5, dest="step_every",
                   help="hits per threshold step")


def build_parser() -> _Parser:
    parser = _Parser(prog="everysearch", description=__doc__.splitlines()[0])
    parser.add_argument("--home", help="state directory (default: $EVERYSEARCH_HOME)")
    parser.add_argument("--weights", help="weight file (default: <home>/weights.embw)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="index a project tree")
    p.add_argument("root")
    p.add_argument("--with-bodies", action="store_true", help="embed function bodies too")
    p.add_argument("--body-budget", type=int, default=64, help="max body lines per function")
    p.add_argument("--ignore", action="append", default=[], help="directory/file name to skip")

    p = sub.add_parser("query", help="search the index")
    p.add_argument("text")
    p.add_argument("--k", type=int, default=10, help="max semantic results")
    _add_schedule_flags(p)

    p = sub.add_parser("train", help="fine-tune the model on labeled pairs")
    p.add_argument("pairs", help="TSV: label<TAB>query<TAB>item_text")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="ranking metrics on a dataset")
    p.add_argument("dataset", help="TSV: query<TAB>id1,id2,...")
    p.add_argument("--threshold", type=float, default=0.0)

    p = sub.add_parser("sweep", help="metrics across several thresholds, as CSV")
    p.add_argument("dataset")
    p.add_argument("--thresholds", required=True, help="comma-separated, e.g. 0.2,0.4,0.6")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("serve", help="HTTP search endpoint")
    p.add_argument("--port", type=int, default=7777)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--index-root", help="project to (re)index in the background on startup")
    _add_schedule_flags(p)

    return parser


def _cmd_index(args) -> int:
    store, weights = _open_state(args)
    config = IndexConfig(
        include_bodies=args.with_bodies,
        body_line_budget=args.body_budget,
        ignore_names=IndexConfig().ignore_names | frozenset(args.ignore),
    )
    with store:
        indexer = ProjectIndexer(args.root, store, weights, config)
        report = indexer.index_project()
    if args.json:
        print(json.dumps({
            "items": report.items,
            "files": report.files,
            "embedded": report.embedded,
            "duration_s": round(report.duration, 6),
            "items_per_second": round(report.items_per_second, 2),
            "avg_ms_per_item": round(report.avg_ms_per_item, 4),
        }))
    else:
        print(
            f"indexed {report.items} items from {report.files} files in "
            f"{report.duration:.2f}s ({report.items_per_second:.0f} items/s, "
            f"{report.avg_ms_per_item:.3f} ms/item, {report.embedded} embedded)"
        )
    return 0


def _cmd_query(args) -> int:
    store, weights = _open_state(args)
    with store:
        manifest = store.path + ".manifest.json"
        items = load_manifest_items(manifest) if os.path.exists(manifest) else []
        standard = standard_search(items, args.text)
        outcome = search(store, weights, args.text, _schedule(args), args.k)
        merged = merge_results(standard, outcome.ranking)
        names = {rec.item_id: rec.display_name for rec in items}
    payload = done_payload(merged, names, outcome.warning)
    if args.json:
        print(json.dumps(payload))
    else:
        if outcome.warning:
            print(f"warning: {outcome.warning}", file=sys.stderr)
        for i, row in enumerate(payload["results"], start=1):
            score = "" if row["score"] is None else f" {row['score']:.4f}"
            kind = row["kind"] or "?"
            print(f"{i:3d}. {row['name']}  [{kind}]{score}  ({row['source']})")
        if not payload["results"]:
            print("no results")
    return 0


def _cmd_train(args) -> int:
    pairs = trainer.load_pairs(args.pairs)
    weights = _load_or_init_weights(args)
    config = trainer.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=args.seed
    )
    trained, history = trainer.train(weights, pairs, config)
    embedder.save_weights(trained, _weights_path(args))
    if args.json:
        print(json.dumps({"pairs": len(pairs), "epochs": args.epochs, "loss_history": history}))
    else:
        first = history[0] if history else float("nan")
        last = history[-1] if history else float("nan")
        print(f"trained on {len(pairs)} pairs for {args.epochs} epochs: "
              f"loss {first:.4f} -> {last:.4f}; saved {_weights_path(args)}")
    return 0


def _cmd_eval(args) -> int:
    store, weights = _open_state(args)
    dataset = evalkit.load_dataset(args.dataset)
    with store:
        result = evalkit.threshold_sweep(store, weights, dataset, [args.threshold])
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    report = result.reports[0]
    if args.json:
        print(json.dumps(asdict(report)))
    else:
        print(f"threshold={report.threshold:.2f} ndcg@10={report.ndcg_at_10:.4f} "
              f"mrr@10={report.mrr_at_10:.4f} precision={report.precision:.4f} "
              f"recall={report.recall:.4f} avg_found={report.avg_found:.1f}")
    return 0


def _cmd_sweep(args) -> int:
    try:
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    except ValueError:
        raise _UsageError(f"bad --thresholds value: {args.thresholds!r}")
    if not thresholds:
        raise _UsageError("--thresholds must list at least one number")
    store, weights = _open_state(args)
    dataset = evalkit.load_dataset(args.dataset)
    with store:
        result = evalkit.threshold_sweep(store, weights, dataset, thresholds)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            evalkit.write_sweep_csv(result.reports, fh)
    else:
        evalkit.write_sweep_csv(result.reports, sys.stdout)
    return 0


def _cmd_serve(args) -> int:
    store, weights = _open_state(args)
    manifest = store.path + ".manifest.json"
    items = load_manifest_items(manifest) if os.path.exists(manifest) else []
    state = AppState(store=store, weights=weights, items=items,
                     schedule=_schedule(args), k=args.k)
    server = SearchServer(state, ServerConfig(port=args.port, host=args.host,
                                              schedule=_schedule(args), k=args.k))
    if args.index_root:
        server.start_background_index(args.index_root)
    print(f"serving on http://{args.host}:{server.port} "
          f"({len(store)} items, dim {store.dim})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    finally:
        store.close()
    return 0


_COMMANDS = {
    "index": _cmd_index,
    "query": _cmd_query,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EverysearchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
