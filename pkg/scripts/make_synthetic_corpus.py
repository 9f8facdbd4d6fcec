#!/usr/bin/env python3
"""Generate a synthetic project tree plus training/eval files.

Writes a small fake codebase (files with class/function declarations and
an actions registry), a labeled pairs file for training, and an eval
dataset whose queries use synonym wording for a subset of items.

Example:
    python scripts/make_synthetic_corpus.py --out /tmp/demo --files 40
"""

import argparse
import os
import random

CONCEPTS = [
    ("open file", "display document"),
    ("close window", "dismiss panel"),
    ("run tests", "execute suite"),
    ("find usages", "locate references"),
    ("format code", "tidy source"),
    ("rename symbol", "relabel identifier"),
    ("extract method", "pull out function"),
    ("toggle breakpoint", "switch debug stop"),
    ("commit changes", "record snapshot"),
    ("push branch", "upload commits"),
]

WORDS = [
    "parser", "buffer", "stream", "cache", "config", "worker", "router",
    "client", "server", "index", "token", "vector", "search", "store",
]


def snake(words: str) -> str:
    return words.replace(" ", "_")


def make_tree(root: str, n_files: int, rng: random.Random) -> None:
    for i in range(n_files):
        lines = []
        for _ in range(rng.randint(1, 4)):
            a, b = rng.choice(WORDS), rng.choice(WORDS)
            if rng.random() < 0.3:
                lines.append(f"class {a.title()}{b.title()}:")
            else:
                lines.append(f"def {a}_{b}_{rng.randint(0, 99)}():")
            lines.append(f"    return '{rng.choice(WORDS)}'")
        path = os.path.join(root, f"pkg_{i % 8}", f"{rng.choice(WORDS)}_{i}.py")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    with open(os.path.join(root, "actions.tsv"), "w", encoding="utf-8") as fh:
        for item_text, _ in CONCEPTS:
            fh.write(f"{snake(item_text)}\t{item_text.title()}\n")


def make_pairs(path: str, rng: random.Random) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item_text, query_text in CONCEPTS:
            fh.write(f"1\t{query_text}\t{item_text.title()}\n")
            negative = rng.choice([c for c, _ in CONCEPTS if c != item_text])
            fh.write(f"0\t{query_text}\t{negative.title()}\n")


def make_dataset(path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item_text, query_text in CONCEPTS:
            fh.write(f"{query_text}\taction:actions.tsv:{snake(item_text)}\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--files", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    project = os.path.join(args.out, "project")
    os.makedirs(project, exist_ok=True)
    make_tree(project, args.files, rng)
    make_pairs(os.path.join(args.out, "pairs.tsv"), rng)
    make_dataset(os.path.join(args.out, "dataset.tsv"))
    print(f"wrote {project}, pairs.tsv, dataset.tsv under {args.out}")


if __name__ == "__main__":
    main()
