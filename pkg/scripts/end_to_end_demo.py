#!/usr/bin/env python3
"""Index, search, train, and sweep against a generated corpus in one run.

Builds the synthetic corpus in a temp directory, indexes it with the
stock untrained model, shows a query before and after fine-tuning on the
synonym pairs, and prints the threshold sweep CSV.

Example:
    python scripts/end_to_end_demo.py
"""

import subprocess
import sys
import tempfile
import os

from everysearch.embedder import default_weights
from everysearch.engine import ThresholdSchedule, merge_results, search, standard_search
from everysearch.evalkit import load_dataset, threshold_sweep, write_sweep_csv
from everysearch.indexer import ProjectIndexer
from everysearch.store import open_or_create
from everysearch.trainer import TrainConfig, load_pairs, train


def show(store, weights, items, query):
    outcome = search(store, weights, query, ThresholdSchedule(base=0.0), k=5)
    merged = merge_results(standard_search(items, query), outcome.ranking)
    print(f"  query {query!r}:")
    for hit in merged[:5]:
        score = "" if hit.source == "standard" else f" {hit.score:.3f}"
        print(f"    [{hit.source}]{score} {hit.item_id}")


def main() -> None:
    base = tempfile.mkdtemp(prefix="everysearch-demo-")
    subprocess.run(
        [sys.executable, os.path.join(os.path.dirname(__file__), "make_synthetic_corpus.py"),
         "--out", base, "--files", "30"],
        check=True,
    )
    weights = default_weights()
    store = open_or_create(os.path.join(base, "store.embs"), weights.out_dim)
    indexer = ProjectIndexer(os.path.join(base, "project"), store, weights)
    report = indexer.index_project()
    print(f"indexed {report.items} items in {report.duration:.2f}s "
          f"({report.avg_ms_per_item:.3f} ms/item)")
    items = indexer.item_records()

    print("before training:")
    show(store, weights, items, "display document")

    pairs = load_pairs(os.path.join(base, "pairs.tsv"))
    trained, history = train(weights, pairs, TrainConfig(epochs=120, learning_rate=0.1))
    print(f"trained on {len(pairs)} pairs: loss {history[0]:.3f} -> {history[-1]:.3f}")

    # re-embed with the trained model so stored vectors match it
    store2 = open_or_create(os.path.join(base, "store2.embs"), trained.out_dim)
    indexer2 = ProjectIndexer(os.path.join(base, "project"), store2, trained)
    indexer2.index_project()
    print("after training:")
    show(store2, trained, indexer2.item_records(), "display document")

    dataset = load_dataset(os.path.join(base, "dataset.tsv"))
    result = threshold_sweep(store2, trained, dataset, [0.1, 0.3, 0.5, 0.7, 0.9])
    print("\nsweep:")
    write_sweep_csv(result.reports, sys.stdout)
    store.close()
    store2.close()
    print(f"\nartifacts left in {base}")


if __name__ == "__main__":
    main()
