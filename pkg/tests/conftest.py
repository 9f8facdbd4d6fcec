import os

import pytest

from everysearch.embedder import default_weights


@pytest.fixture
def tiny_weights():
    # small dims keep unit tests fast; the acceptance suite sizes up
    return default_weights(seed=7, buckets=512, token_dim=16, hidden=24, out_dim=16)


@pytest.fixture
def tiny_tree(tmp_path):
    """3 files, 2 with one declaration each: 5 items total."""
    root = tmp_path / "proj"
    root.mkdir()
    (root / "a.py").write_text("def parse_args():\n    pass\n")
    (root / "b.txt").write_text("hello\n")
    (root / "c.rs").write_text("fn main() {}\n")
    return str(root)


def write_tree(root, files: dict[str, str]) -> None:
    for rel, content in files.items():
        path = os.path.join(root, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)
