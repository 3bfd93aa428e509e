"""Disk-backed embedding cache: content-addressed blobs with LRU eviction.

Embeddings are computed once per (volume, axis, slice, predictor,
window/level) and reused across calls and process restarts. Concurrent
requests for one key trigger a single compute; everyone else waits.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from ..errors import CacheIOError

DEFAULT_BUDGET = 2 * 1024 ** 3  # bytes


@dataclass(frozen=True, order=True)
class EmbeddingKey:
    volume_digest: str
    axis: str
    slice_index: int
    predictor_id: str
    window: float
    level: float

    def storage_name(self) -> str:
        text = "|".join([
            self.volume_digest, self.axis, str(self.slice_index),
            self.predictor_id, repr(self.window), repr(self.level),
        ])
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {
            "volume_digest": self.volume_digest, "axis": self.axis,
            "slice_index": self.slice_index, "predictor_id": self.predictor_id,
            "window": self.window, "level": self.level,
        }


@dataclass
class _Entry:
    key: EmbeddingKey
    byte_size: int
    created_at: float
    last_used: int  # logical clock, monotone per cache


class _InFlight:
    def __init__(self):
        self.event = threading.Event()
        self.error: BaseException | None = None


@dataclass(frozen=True)
class CacheStats:
    entries: int
    total_bytes: int
    budget_bytes: int


class EmbeddingCache:
    def __init__(self, root: str | Path, budget_bytes: int = DEFAULT_BUDGET):
        self.root = Path(root)
        self.budget_bytes = int(budget_bytes)
        self._blobs = self.root / "blobs"
        self._index_path = self.root / "index.json"
        self._lock = threading.RLock()
        self._inflight: dict[str, _InFlight] = {}
        self._index: dict[str, _Entry] = {}
        self._clock = 0
        try:
            self._blobs.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CacheIOError(f"cannot create cache root {self.root}: {exc}") from exc
        self._load_index()

    # -- persistence ----------------------------------------------------------

    def _load_index(self):
        if not self._index_path.exists():
            return
        try:
            payload = json.loads(self._index_path.read_text())
        except (OSError, ValueError):
            return  # unreadable index: start empty, blobs get re-added on use
        self._clock = int(payload.get("clock", 0))
        for name, item in payload.get("entries", {}).items():
            key = EmbeddingKey(**item["key"])
            self._index[name] = _Entry(
                key=key, byte_size=int(item["byte_size"]),
                created_at=float(item["created_at"]), last_used=int(item["last_used"]),
            )

    def _save_index(self):
        payload = {
            "clock": self._clock,
            "entries": {
                name: {
                    "key": e.key.to_dict(), "byte_size": e.byte_size,
                    "created_at": e.created_at, "last_used": e.last_used,
                }
                for name, e in self._index.items()
            },
        }
        tmp = self._index_path.with_suffix(".tmp")
        try:
            tmp.write_text(json.dumps(payload))
            tmp.replace(self._index_path)
        except OSError as exc:
            raise CacheIOError(f"cannot write cache index: {exc}") from exc

    # -- core -----------------------------------------------------------------

    def ensure(self, key: EmbeddingKey, compute: Callable[[], bytes]) -> bytes:
        """Return the cached blob, computing and persisting it exactly once."""
        name = key.storage_name()
        while True:
            with self._lock:
                entry = self._index.get(name)
                if entry is not None:
                    blob = self._read_blob(name)
                    if blob is not None:
                        self._clock += 1
                        entry.last_used = self._clock
                        self._save_index()
                        return blob
                    del self._index[name]  # stale index entry, recompute
                flight = self._inflight.get(name)
                if flight is None:
                    flight = _InFlight()
                    self._inflight[name] = flight
                    owner = True
                else:
                    owner = False
            if not owner:
                flight.event.wait()
                if flight.error is not None:
                    raise flight.error
                continue  # owner inserted the entry; loop reads it

            try:
                blob = compute()
            except BaseException as exc:
                with self._lock:
                    flight.error = exc
                    del self._inflight[name]
                    flight.event.set()
                raise
            with self._lock:
                try:
                    self._insert(name, key, blob)
                except BaseException as exc:
                    flight.error = exc
                    del self._inflight[name]
                    flight.event.set()
                    raise
                del self._inflight[name]
                flight.event.set()
            return blob

    def _read_blob(self, name: str) -> bytes | None:
        try:
            return (self._blobs / name).read_bytes()
        except OSError:
            return None

    def _insert(self, name: str, key: EmbeddingKey, blob: bytes):
        tmp = self._blobs / (name + ".tmp")
        try:
            tmp.write_bytes(blob)
            tmp.replace(self._blobs / name)
        except OSError as exc:
            raise CacheIOError(f"cannot persist embedding blob: {exc}") from exc
        self._clock += 1
        self._index[name] = _Entry(
            key=key, byte_size=len(blob), created_at=time.time(),
            last_used=self._clock,
        )
        self._evict_to(self.budget_bytes)
        self._save_index()

    def invalidate(self, key: EmbeddingKey):
        with self._lock:
            name = key.storage_name()
            if name in self._index:
                del self._index[name]
                (self._blobs / name).unlink(missing_ok=True)
                self._save_index()

    # -- admin ----------------------------------------------------------------

    def stats(self) -> CacheStats:
        with self._lock:
            return CacheStats(
                entries=len(self._index),
                total_bytes=sum(e.byte_size for e in self._index.values()),
                budget_bytes=self.budget_bytes,
            )

    def gc(self, budget_bytes: int | None = None) -> int:
        """Evict least-recently-used entries down to the budget."""
        with self._lock:
            evicted = self._evict_to(
                self.budget_bytes if budget_bytes is None else int(budget_bytes)
            )
            self._save_index()
            return evicted

    def clear(self) -> int:
        with self._lock:
            count = len(self._index)
            for name in list(self._index):
                (self._blobs / name).unlink(missing_ok=True)
            self._index.clear()
            self._save_index()
            return count

    def _evict_to(self, budget: int) -> int:
        total = sum(e.byte_size for e in self._index.values())
        evicted = 0
        # oldest first; embedding-key ordering breaks last_used ties deterministically
        order = sorted(self._index.items(), key=lambda kv: (kv[1].last_used, kv[1].key))
        for name, entry in order:
            if total <= budget:
                break
            (self._blobs / name).unlink(missing_ok=True)
            del self._index[name]
            total -= entry.byte_size
            evicted += 1
        return evicted
