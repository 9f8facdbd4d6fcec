"""Project walking, item extraction, and incremental index sync.

Four kinds of searchable item come out of a project tree: one item per
file, class and function declarations found by line-based patterns, and
named actions read from a registry file (``actions.tsv`` by default,
lines of ``action_id<TAB>Display Name``).

Extraction is deliberately pattern-based rather than a parser: a line
declares a class when it contains ``class X`` and a function for any of
``def x`` / ``fn x`` / ``function x`` / ``fun x``, which covers the usual
Python, Rust, JavaScript, and Kotlin shapes well enough for search.

Item ids are stable across runs: ``kind:relative/path`` for files and
``kind:relative/path:qualified_name`` otherwise, with ``#n`` appended to
repeated names within one file.  Change detection uses a 64-bit content
hash per file, so re-indexing an unchanged tree embeds nothing.  The
id/name/hash bookkeeping persists as a JSON manifest next to the store,
rewritten after every change batch.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

from .embedder import ModelWeights, embed_text, fnv1a_64, weights_fingerprint
from .store import EmbeddingStore

__all__ = [
    "Change",
    "ChangeKind",
    "DeltaReport",
    "IndexConfig",
    "IndexItem",
    "IndexReport",
    "ItemKind",
    "ItemRecord",
    "ProjectIndexer",
    "extract_items",
    "kind_from_item_id",
    "load_manifest_items",
]

log = logging.getLogger(__name__)

DEFAULT_IGNORES = frozenset(
    {"__pycache__", "node_modules", "target", "build", "dist", "venv", ".venv"}
)
IGNORE_FILE = ".everysearchignore"


class ItemKind(str, Enum):
    FILE = "file"
    CLASS = "class"
    SYMBOL = "symbol"
    ACTION = "action"


def kind_from_item_id(item_id: str) -> ItemKind | None:
    prefix = item_id.split(":", 1)[0]
    try:
        return ItemKind(prefix)
    except ValueError:
        return None


@dataclass(frozen=True)
class IndexItem:
    """One searchable entity and the text that will be embedded for it."""

    item_id: str
    kind: ItemKind
    display_name: str
    text_repr: str
    origin_path: str


@dataclass(frozen=True)
class IndexConfig:
    """Extraction and walking knobs.

    ``include_bodies`` trades indexing time for search quality: function
    items additionally embed their body lines, truncated to
    ``body_line_budget`` lines.
    """

    include_bodies: bool = False
    body_line_budget: int = 64
    ignore_names: frozenset[str] = DEFAULT_IGNORES
    actions_registry: str = "actions.tsv"


@dataclass
class IndexReport:
    items: int
    duration: float
    items_per_second: float
    embedded: int
    files: int

    @property
    def avg_ms_per_item(self) -> float:
        return 0.0 if self.items == 0 else 1000.0 * self.duration / self.items


class ChangeKind(str, Enum):
    ADDED = "added"
    MODIFIED = "modified"
    REMOVED = "removed"


@dataclass(frozen=True)
class Change:
    kind: ChangeKind
    path: str  # relative to the project root, forward slashes
    content: bytes | None = None


@dataclass
class DeltaReport:
    added: list[str] = field(default_factory=list)
    updated: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    embedded: int = 0


@dataclass(frozen=True)
class ItemRecord:
    """Manifest view of an item: what search surfaces need besides the vector."""

    item_id: str
    kind: ItemKind
    display_name: str
    origin_path: str


_CLASS_RE = re.compile(r"(?:^|[\s(])class\s+([A-Za-z_][A-Za-z0-9_]*)")
_FUNC_RE = re.compile(r"(?:^|[\s(])(?:def|fn|function|fun)\s+([A-Za-z_][A-Za-z0-9_]*)")
_DECL_RE = re.compile(r"(?:^|[\s(])(?:class|def|fn|function|fun)\s+[A-Za-z_]")


def _decode(content: bytes | str) -> str | None:
    if isinstance(content, str):
        return content
    try:
        return content.decode("utf-8")
    except UnicodeDecodeError:
        return None


def _body_lines(lines: list[str], decl_index: int, budget: int) -> list[str]:
    body: list[str] = []
    for line in lines[decl_index + 1 :]:
        if len(body) >= budget:
            break
        if _DECL_RE.search(line):
            break
        body.append(line)
    return body


def content_hash(content: bytes) -> str:
    return f"{fnv1a_64(content):016x}"


def extract_items(
    file_path: str,
    content: bytes | str,
    config: IndexConfig = IndexConfig(),
) -> list[IndexItem]:
    """Extract every item a file contributes, best effort.

    Always yields the File item.  Undecodable content degrades to just
    that.  The actions registry contributes one Action item per line.
    """
    rel = file_path.replace(os.sep, "/")
    base = os.path.basename(rel)
    stem = os.path.splitext(base)[0]
    items = [
        IndexItem(
            item_id=f"file:{rel}",
            kind=ItemKind.FILE,
            display_name=base,
            text_repr=stem or base,
            origin_path=rel,
        )
    ]
    text = _decode(content)
    if text is None:
        return items

    if base == config.actions_registry:
        for line in text.splitlines():
            if not line.strip():
                continue
            action_id, sep, display = line.partition("\t")
            if not sep or not action_id.strip() or not display.strip():
                log.warning("skipping malformed action line in %s: %r", rel, line)
                continue
            items.append(
                IndexItem(
                    item_id=f"action:{rel}:{action_id.strip()}",
                    kind=ItemKind.ACTION,
                    display_name=display.strip(),
                    text_repr=display.strip(),
                    origin_path=rel,
                )
            )
        return items

    lines = text.splitlines()
    seen: dict[tuple[ItemKind, str], int] = {}
    for i, line in enumerate(lines):
        match = _CLASS_RE.search(line)
        kind = ItemKind.CLASS
        if match is None:
            match = _FUNC_RE.search(line)
            kind = ItemKind.SYMBOL
        if match is None:
            continue
        name = match.group(1)
        ordinal = seen.get((kind, name), 0) + 1
        seen[(kind, name)] = ordinal
        qualified = name if ordinal == 1 else f"{name}#{ordinal}"
        text_repr = name
        if kind is ItemKind.SYMBOL and config.include_bodies:
            body = _body_lines(lines, i, config.body_line_budget)
            if body:
                text_repr = name + "\n" + "\n".join(body)
        items.append(
            IndexItem(
                item_id=f"{kind.value}:{rel}:{qualified}",
                kind=kind,
                display_name=name,
                text_repr=text_repr,
                origin_path=rel,
            )
        )
    return items


def _load_ignore_file(root: str) -> frozenset[str]:
    path = os.path.join(root, IGNORE_FILE)
    if not os.path.exists(path):
        return frozenset()
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


class ProjectIndexer:
    """Keeps a store in sync with a project tree, one shared model throughout."""

    def __init__(
        self,
        root: str,
        store: EmbeddingStore,
        weights: ModelWeights,
        config: IndexConfig = IndexConfig(),
        manifest_path: str | None = None,
    ):
        self.root = os.fspath(root)
        self.store = store
        self.weights = weights
        self.config = replace(
            config, ignore_names=config.ignore_names | _load_ignore_file(self.root)
        )
        self.manifest_path = manifest_path or store.path + ".manifest.json"
        # files: rel -> {"hash": str, "items": [id, ...]}
        # items: id -> {"name", "kind", "path", "text_hash"}
        # order: ids in first-insertion order (standard search ranks by it)
        self._fingerprint = weights_fingerprint(weights)
        self._files: dict[str, dict] = {}
        self._items: dict[str, dict] = {}
        self._order: list[str] = []
        self._load_manifest()

    # -- manifest ------------------------------------------------------------

    def _load_manifest(self) -> None:
        if not os.path.exists(self.manifest_path):
            return
        with open(self.manifest_path, encoding="utf-8") as fh:
            data = json.load(fh)
        self._files = data.get("files", {})
        self._items = data.get("items", {})
        self._order = data.get("order", [])
        if data.get("model") != self._fingerprint:
            # different weights: every stored vector is stale, so drop the
            # text hashes and let the next sync re-embed in place
            log.info("model changed since last index; all items will re-embed")
            for entry in self._items.values():
                entry.pop("text_hash", None)
            for entry in self._files.values():
                entry["hash"] = ""

    def _save_manifest(self) -> None:
        tmp = self.manifest_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "version": 1,
                    "model": self._fingerprint,
                    "files": self._files,
                    "items": self._items,
                    "order": self._order,
                },
                fh,
            )
        os.replace(tmp, self.manifest_path)

    def item_records(self) -> list[ItemRecord]:
        """Live items in insertion order."""
        return [
            ItemRecord(
                item_id=item_id,
                kind=ItemKind(self._items[item_id]["kind"]),
                display_name=self._items[item_id]["name"],
                origin_path=self._items[item_id]["path"],
            )
            for item_id in self._order
        ]

    # -- embedding ----------------------------------------------------------

    def _embed(self, text: str):
        return embed_text(self.weights, text)

    def _sync_file(self, rel: str, content: bytes, report: DeltaReport) -> None:
        new_items = extract_items(rel, content, self.config)
        old_ids = list(self._files.get(rel, {}).get("items", []))
        new_by_id = {item.item_id: item for item in new_items}
        for item_id in old_ids:
            if item_id not in new_by_id:
                self.store.remove(item_id)
                self._items.pop(item_id, None)
                self._order.remove(item_id)
                report.removed.append(item_id)
        for item in new_items:
            prior = self._items.get(item.item_id)
            text_hash = content_hash(item.text_repr.encode("utf-8"))
            if prior is not None and prior.get("text_hash") == text_hash:
                continue
            self.store.put(item.item_id, self._embed(item.text_repr))
            report.embedded += 1
            if prior is None:
                self._order.append(item.item_id)
                report.added.append(item.item_id)
            else:
                report.updated.append(item.item_id)
            self._items[item.item_id] = {
                "name": item.display_name,
                "kind": item.kind.value,
                "path": item.origin_path,
                "text_hash": text_hash,
            }
        self._files[rel] = {
            "hash": content_hash(content),
            "items": [item.item_id for item in new_items],
        }

    def _remove_file(self, rel: str, report: DeltaReport) -> None:
        entry = self._files.pop(rel, None)
        if entry is None:
            return
        for item_id in entry.get("items", []):
            if item_id in self._items:
                self.store.remove(item_id)
                self._items.pop(item_id, None)
                self._order.remove(item_id)
                report.removed.append(item_id)

    # -- public operations ----------------------------------------------------

    def _walk(self) -> Iterable[str]:
        ignores = self.config.ignore_names
        for dirpath, dirnames, filenames in os.walk(self.root):
            dirnames[:] = sorted(
                d for d in dirnames if not d.startswith(".") and d not in ignores
            )
            for name in sorted(filenames):
                if name.startswith(".") or name in ignores:
                    continue
                rel = os.path.relpath(os.path.join(dirpath, name), self.root)
                yield rel.replace(os.sep, "/")

    def index_project(self) -> IndexReport:
        """Full sync: walk the tree, embed what changed, drop what vanished."""
        if not os.path.isdir(self.root):
            raise FileNotFoundError(f"project root not found: {self.root}")
        started = time.perf_counter()
        delta = DeltaReport()
        seen: set[str] = set()
        files = 0
        for rel in self._walk():
            files += 1
            seen.add(rel)
            try:
                with open(os.path.join(self.root, rel), "rb") as fh:
                    content = fh.read()
            except OSError as exc:
                log.warning("skipping unreadable file %s: %s", rel, exc)
                continue
            if self._files.get(rel, {}).get("hash") == content_hash(content):
                continue
            self._sync_file(rel, content, delta)
        for rel in [r for r in self._files if r not in seen]:
            self._remove_file(rel, delta)
        self._save_manifest()
        duration = time.perf_counter() - started
        items = len(self.store)
        return IndexReport(
            items=items,
            duration=duration,
            items_per_second=items / duration if duration > 0 else float("inf"),
            embedded=delta.embedded,
            files=files,
        )

    def apply_change(self, change: Change) -> DeltaReport:
        """Apply one file event; store state converges to a fresh reindex."""
        rel = change.path.replace(os.sep, "/")
        report = DeltaReport()
        if change.kind is ChangeKind.REMOVED:
            self._remove_file(rel, report)
        else:
            if change.content is None:
                raise ValueError(f"{change.kind.value} change needs content")
            self._sync_file(rel, change.content, report)
        self._save_manifest()
        return report


def load_manifest_items(manifest_path: str) -> list[ItemRecord]:
    """Read item records from a manifest without a live indexer."""
    with open(manifest_path, encoding="utf-8") as fh:
        data = json.load(fh)
    items = data.get("items", {})
    return [
        ItemRecord(
            item_id=item_id,
            kind=ItemKind(items[item_id]["kind"]),
            display_name=items[item_id]["name"],
            origin_path=items[item_id]["path"],
        )
        for item_id in data.get("order", [])
    ]
