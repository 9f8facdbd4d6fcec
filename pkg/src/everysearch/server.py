"""HTTP surface: a streaming search endpoint and a status probe.

Built on the standard library's threading HTTP server so the engine stays
dependency-light.  Each request runs in its own thread; searches read
store snapshots, so they never block each other, the status probe, or a
background indexing task.

Endpoints:

``GET /search?q=<text>&k=<n>``
    Responds ``text/event-stream``.  Zero or more ``hit`` events stream
    out as matches are found (standard substring hits first, then
    semantic hits in scan order), followed by exactly one ``done`` event
    with the merged final ranking.  Missing ``q`` is a 400; a server
    without an open store is a 503.

``GET /status``
    JSON ``{"item_count": n, "dim": d, "indexing": bool}``.

Event framing (bit-exact): each event is the line ``event: hit`` or
``event: done``, then ``data: <one-line JSON>``, then one blank line.
Lines end with ``\\n``.

Hit JSON fields: ``item_id``, ``name``, ``kind`` (``file`` / ``class`` /
``symbol`` / ``action`` / null), ``score`` (cosine rounded to 6 decimals;
null for standard hits), ``source`` (``standard`` / ``semantic``).
The ``done`` data is ``{"results": [<hit JSON>, ...]}`` plus a
``"warning"`` key when the search degraded.  The ``done`` payload is
byte-identical to ``everysearch query --json`` for the same state.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .embedder import ModelWeights
from .engine import (
    STANDARD_SCORE,
    SearchHit,
    SearchOutcome,
    ThresholdSchedule,
    merge_results,
    search_stream,
    standard_search,
)
from .indexer import IndexConfig, ItemRecord, ProjectIndexer
from .store import EmbeddingStore

__all__ = ["AppState", "SearchServer", "ServerConfig", "hit_payload", "done_payload"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServerConfig:
    port: int = 7777
    host: str = "127.0.0.1"
    schedule: ThresholdSchedule = ThresholdSchedule()
    k: int = 10

    def __post_init__(self):
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class AppState:
    """Everything a request needs, shared across handler threads."""

    store: EmbeddingStore | None
    weights: ModelWeights | None
    items: list[ItemRecord] = field(default_factory=list)
    schedule: ThresholdSchedule = ThresholdSchedule()
    k: int = 10
    indexing: threading.Event = field(default_factory=threading.Event)
    _items_lock: threading.Lock = field(default_factory=threading.Lock)

    def item_snapshot(self) -> list[ItemRecord]:
        with self._items_lock:
            return list(self.items)

    def set_items(self, items: list[ItemRecord]) -> None:
        with self._items_lock:
            self.items = list(items)

    def names(self) -> dict[str, str]:
        return {rec.item_id: rec.display_name for rec in self.item_snapshot()}


def hit_payload(hit: SearchHit, names: dict[str, str]) -> dict:
    score = None if hit.score == STANDARD_SCORE else float(f"{hit.score:.6f}")
    return {
        "item_id": hit.item_id,
        "name": names.get(hit.item_id, hit.item_id),
        "kind": hit.kind.value if hit.kind is not None else None,
        "score": score,
        "source": hit.source,
    }


def done_payload(
    merged: list[SearchHit], names: dict[str, str], warning: str | None = None
) -> dict:
    payload = {"results": [hit_payload(h, names) for h in merged]}
    if warning is not None:
        payload["warning"] = warning
    return payload


class _Handler(BaseHTTPRequestHandler):
    state: AppState  # assigned by SearchServer

    # keep-alive for the JSON endpoints; /search opts out per response
    protocol_version = "HTTP/1.1"
    # SSE events must leave as soon as they are flushed
    disable_nagle_algorithm = True

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_event(self, event: str, payload: dict) -> None:
        data = json.dumps(payload)
        self.wfile.write(f"event: {event}\ndata: {data}\n\n".encode("utf-8"))
        self.wfile.flush()

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/status":
            self._handle_status()
        elif url.path == "/search":
            self._handle_search(parse_qs(url.query, keep_blank_values=True))
        else:
            self._send_json(404, {"error": f"no such path: {url.path}"})

    def _handle_status(self):
        state = self.state
        if state.store is None:
            self._send_json(503, {"error": "store unavailable"})
            return
        self._send_json(
            200,
            {
                "item_count": len(state.store),
                "dim": state.store.dim,
                "indexing": state.indexing.is_set(),
            },
        )

    def _handle_search(self, params: dict[str, list[str]]):
        state = self.state
        if "q" not in params:
            self._send_json(400, {"error": "missing required parameter q"})
            return
        if state.store is None or state.weights is None:
            self._send_json(503, {"error": "store unavailable"})
            return
        query = params["q"][0]
        try:
            k = int(params["k"][0]) if "k" in params else state.k
            if k < 1:
                raise ValueError
        except ValueError:
            self._send_json(400, {"error": "k must be a positive integer"})
            return

        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Connection", "close")
        self.end_headers()

        items = state.item_snapshot()
        names = {rec.item_id: rec.display_name for rec in items}
        standard = standard_search(items, query)
        for hit in standard:
            self._send_event("hit", hit_payload(hit, names))
        warning = None
        ranking: tuple[SearchHit, ...] = ()
        for event in search_stream(state.store, state.weights, query, state.schedule, k):
            if isinstance(event, SearchOutcome):
                ranking = event.ranking
                warning = event.warning
            else:
                self._send_event("hit", hit_payload(event, names))
        merged = merge_results(standard, ranking)
        self._send_event("done", done_payload(merged, names, warning))


class _ThreadingServer(ThreadingHTTPServer):
    daemon_threads = True
    # the default backlog of 5 drops SYNs under bursts of concurrent
    # clients, which shows up as one-second connect stalls
    request_queue_size = 128


class SearchServer:
    """Owns the listening socket, shared state, and the background indexer."""

    def __init__(self, state: AppState, config: ServerConfig = ServerConfig()):
        self.state = state
        self.config = config
        handler = type("BoundHandler", (_Handler,), {"state": state})
        self._httpd = _ThreadingServer((config.host, config.port), handler)
        self._thread: threading.Thread | None = None
        self._index_thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        """Serve on a daemon thread (tests and background use)."""
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def start_background_index(
        self, root: str, indexer_config: IndexConfig = IndexConfig()
    ) -> threading.Thread:
        """Index ``root`` into the served store without blocking requests."""
        if self.state.store is None or self.state.weights is None:
            raise RuntimeError("cannot index without an open store and weights")
        indexer = ProjectIndexer(root, self.state.store, self.state.weights, indexer_config)

        def run():
            self.state.indexing.set()
            try:
                indexer.index_project()
                self.state.set_items(indexer.item_records())
            finally:
                self.state.indexing.clear()

        self._index_thread = threading.Thread(target=run, daemon=True)
        self._index_thread.start()
        return self._index_thread
