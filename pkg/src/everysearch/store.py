"""On-disk fixed-record embedding store with random access.

Vectors live consecutively in one file, one fixed-size binary16 record
per slot, so a slot index converts to a byte offset and every update
touches exactly one record instead of rewriting the file.  A sidecar
append-only log persists the id-to-slot map incrementally; deletes
tombstone their slot and the slot is recycled by later inserts.

Vector file layout (little-endian):

    bytes 0-3   magic ``EMBS``
    4-5         version u16 (= 1)
    6-7         dim u16
    8           dtype u8 (= 1, IEEE 754 binary16)
    9-15        reserved, zero
    16-23      record_count u64
    24..        records, each ``dim * 2`` bytes

Sidecar log at ``<path>.log``: length-prefixed entries, compacted on
open when garbage has accumulated.

    u32 payload length | payload

    put payload: u8 1 | u64 slot | id utf-8
    del payload: u8 2 | id utf-8

Vectors are stored exactly as given and read back without
renormalization, so storage is bit-transparent at binary16 precision.

Concurrency: one writer (serialized by the caller), any number of
concurrent readers.  Scans snapshot the live slots at start and read via
``pread``, so they never observe a torn view of the slot map.
"""

from __future__ import annotations

import heapq
import os
import struct
import threading
from typing import Iterator

import numpy as np

from .errors import (
    DimensionMismatchError,
    FormatError,
    NotFoundError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .embedder import f16_decode_array, f16_encode_array

__all__ = ["EmbeddingStore", "open_or_create"]

STORE_MAGIC = b"EMBS"
STORE_VERSION = 1
DTYPE_F16 = 1
_HEADER_SIZE = 24
_COUNT_OFFSET = 16
_HEADER = struct.Struct("<4sHHB7xQ")
_LEN = struct.Struct("<I")
_OP_PUT = 1
_OP_DEL = 2


class EmbeddingStore:
    """Seekable fixed-record vector file plus id-to-slot map."""

    def __init__(self, path: str, dim: int, _create_ok: bool = True):
        self.path = os.fspath(path)
        self.log_path = self.path + ".log"
        self.dim = int(dim)
        if self.dim <= 0 or self.dim > 0xFFFF:
            raise DimensionMismatchError(f"dim out of range: {dim}")
        self._record_size = self.dim * 2
        self._lock = threading.Lock()
        self._slots: dict[str, int] = {}
        self._free: list[int] = []
        self._count = 0
        if os.path.exists(self.path):
            self._open_existing()
        elif _create_ok:
            self._create_fresh()
        else:
            raise FileNotFoundError(self.path)

    # -- lifecycle ---------------------------------------------------------

    def _create_fresh(self) -> None:
        self._fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)
        os.pwrite(self._fd, _HEADER.pack(STORE_MAGIC, STORE_VERSION, self.dim, DTYPE_F16, 0), 0)
        self._log_fd = os.open(self.log_path, os.O_RDWR | os.O_CREAT | os.O_APPEND, 0o644)

    def _open_existing(self) -> None:
        self._fd = os.open(self.path, os.O_RDWR)
        header = os.pread(self._fd, _HEADER_SIZE, 0)
        if len(header) < _HEADER_SIZE:
            os.close(self._fd)
            raise TruncatedFileError(f"{self.path}: header incomplete")
        magic, version, dim, dtype, count = _HEADER.unpack(header)
        if magic != STORE_MAGIC:
            os.close(self._fd)
            raise FormatError(f"{self.path}: bad magic {magic!r}")
        if version != STORE_VERSION:
            os.close(self._fd)
            raise UnsupportedVersionError(f"{self.path}: unsupported version {version}")
        if dtype != DTYPE_F16:
            os.close(self._fd)
            raise FormatError(f"{self.path}: unknown dtype code {dtype}")
        if dim != self.dim:
            os.close(self._fd)
            raise DimensionMismatchError(
                f"{self.path}: file dim {dim} does not match requested dim {self.dim}"
            )
        size = os.fstat(self._fd).st_size
        if size < _HEADER_SIZE + count * self._record_size:
            os.close(self._fd)
            raise TruncatedFileError(f"{self.path}: shorter than record_count implies")
        self._count = count
        self._log_fd = os.open(self.log_path, os.O_RDWR | os.O_CREAT | os.O_APPEND, 0o644)
        self._replay_log()

    def _replay_log(self) -> None:
        raw = b""
        if os.path.exists(self.log_path):
            with open(self.log_path, "rb") as fh:
                raw = fh.read()
        slots: dict[str, int] = {}
        pos = 0
        entries = 0
        valid_end = 0
        while pos + _LEN.size <= len(raw):
            (plen,) = _LEN.unpack_from(raw, pos)
            start = pos + _LEN.size
            end = start + plen
            if end > len(raw) or plen < 1:
                break  # torn tail from an interrupted append
            op = raw[start]
            if op == _OP_PUT and plen >= 9:
                (slot,) = struct.unpack_from("<Q", raw, start + 1)
                item_id = raw[start + 9 : end].decode("utf-8")
                if slot < self._count:
                    slots[item_id] = slot
            elif op == _OP_DEL:
                item_id = raw[start + 1 : end].decode("utf-8")
                slots.pop(item_id, None)
            entries += 1
            pos = end
            valid_end = end
        self._slots = slots
        live = set(slots.values())
        if len(live) != len(slots):
            raise FormatError(f"{self.log_path}: two ids share a slot")
        self._free = sorted(set(range(self._count)) - live)
        heapq.heapify(self._free)
        if entries > len(slots) or valid_end != len(raw):
            self._compact_log()

    def _compact_log(self) -> None:
        tmp = self.log_path + ".tmp"
        with open(tmp, "wb") as fh:
            for item_id, slot in sorted(self._slots.items(), key=lambda kv: kv[1]):
                fh.write(self._put_entry(item_id, slot))
            fh.flush()
            os.fsync(fh.fileno())
        os.close(self._log_fd)
        os.replace(tmp, self.log_path)
        self._log_fd = os.open(self.log_path, os.O_RDWR | os.O_CREAT | os.O_APPEND, 0o644)

    @staticmethod
    def _put_entry(item_id: str, slot: int) -> bytes:
        payload = bytes([_OP_PUT]) + struct.pack("<Q", slot) + item_id.encode("utf-8")
        return _LEN.pack(len(payload)) + payload

    @staticmethod
    def _del_entry(item_id: str) -> bytes:
        payload = bytes([_OP_DEL]) + item_id.encode("utf-8")
        return _LEN.pack(len(payload)) + payload

    def close(self) -> None:
        with self._lock:
            if getattr(self, "_fd", None) is not None:
                self.sync()
                os.close(self._fd)
                os.close(self._log_fd)
                self._fd = None
                self._log_fd = None

    def sync(self) -> None:
        """fsync both files; per-operation writes are OS-durable already."""
        os.fsync(self._fd)
        os.fsync(self._log_fd)

    def __enter__(self) -> "EmbeddingStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- operations --------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._slots)

    @property
    def record_count(self) -> int:
        """Live plus tombstoned slots; the file holds exactly this many records."""
        with self._lock:
            return self._count

    def __contains__(self, item_id: str) -> bool:
        with self._lock:
            return item_id in self._slots

    def live_ids(self) -> list[str]:
        with self._lock:
            return list(self._slots)

    def _encode_record(self, embedding) -> bytes:
        vec = np.asarray(embedding, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DimensionMismatchError(
                f"embedding shape {vec.shape} does not match store dim {self.dim}"
            )
        return f16_encode_array(vec).astype("<u2").tobytes()

    def put(self, item_id: str, embedding) -> int:
        """Write one record and return its slot.

        An existing id is updated in place.  A new id takes the lowest
        free (tombstoned) slot, else appends.  Write order makes the log
        entry the commit point: record data first, then the header count,
        then the log append, so a crash between any two steps leaves every
        live id readable.
        """
        if not item_id:
            raise ValueError("item_id must be non-empty")
        record = self._encode_record(embedding)
        with self._lock:
            slot = self._slots.get(item_id)
            if slot is not None:
                os.pwrite(self._fd, record, _HEADER_SIZE + slot * self._record_size)
                return slot
            appended = False
            if self._free:
                slot = heapq.heappop(self._free)
            else:
                slot = self._count
                appended = True
            os.pwrite(self._fd, record, _HEADER_SIZE + slot * self._record_size)
            if appended:
                self._count += 1
                os.pwrite(self._fd, struct.pack("<Q", self._count), _COUNT_OFFSET)
            os.write(self._log_fd, self._put_entry(item_id, slot))
            self._slots[item_id] = slot
            return slot

    def get(self, item_id: str) -> np.ndarray:
        """Read one record back as fp32, exactly as stored (no renormalize)."""
        with self._lock:
            slot = self._slots.get(item_id)
        if slot is None:
            raise NotFoundError(item_id)
        raw = os.pread(self._fd, self._record_size, _HEADER_SIZE + slot * self._record_size)
        if len(raw) != self._record_size:
            raise TruncatedFileError(f"{self.path}: short read at slot {slot}")
        return f16_decode_array(np.frombuffer(raw, dtype="<u2"))

    def get_f16_bits(self, item_id: str) -> bytes:
        """Raw binary16 record bytes, for bitwise comparisons."""
        with self._lock:
            slot = self._slots.get(item_id)
        if slot is None:
            raise NotFoundError(item_id)
        return os.pread(self._fd, self._record_size, _HEADER_SIZE + slot * self._record_size)

    def remove(self, item_id: str) -> None:
        """Tombstone the id's slot and free the id."""
        with self._lock:
            slot = self._slots.pop(item_id, None)
            if slot is None:
                raise NotFoundError(item_id)
            heapq.heappush(self._free, slot)
            os.write(self._log_fd, self._del_entry(item_id))

    def _snapshot(self) -> list[tuple[int, str]]:
        with self._lock:
            return sorted((slot, item_id) for item_id, slot in self._slots.items())

    def scan(self) -> Iterator[tuple[str, np.ndarray]]:
        """Yield every live record once, in slot order.

        Snapshot-at-start semantics: records put or removed after the scan
        begins are not required to appear.
        """
        for ids, block in self.scan_blocks():
            for i, item_id in enumerate(ids):
                yield item_id, block[i]

    def scan_blocks(self, block_size: int = 2048) -> Iterator[tuple[list[str], np.ndarray]]:
        """Like :meth:`scan` but yields batches ``(ids, fp32 matrix)``.

        Each batch is served by a single contiguous read, which keeps
        brute-force scans cheap while preserving slot order.
        """
        snapshot = self._snapshot()
        for start in range(0, len(snapshot), block_size):
            chunk = snapshot[start : start + block_size]
            first = chunk[0][0]
            last = chunk[-1][0]
            raw = os.pread(
                self._fd,
                (last - first + 1) * self._record_size,
                _HEADER_SIZE + first * self._record_size,
            )
            if len(raw) != (last - first + 1) * self._record_size:
                raise TruncatedFileError(f"{self.path}: short read during scan")
            span = f16_decode_array(np.frombuffer(raw, dtype="<u2")).reshape(-1, self.dim)
            ids = [item_id for _, item_id in chunk]
            rows = span[[slot - first for slot, _ in chunk]]
            yield ids, rows


def open_or_create(path, dim: int) -> EmbeddingStore:
    """Open an existing store at ``path`` or create an empty one."""
    return EmbeddingStore(path, dim)
