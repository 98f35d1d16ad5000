"""Embedded transactional store.

Design constraints:
  * one mutation request = one transaction = one journal line; the line is
    fsynced before the in-memory state changes, so a crash at any point
    leaves the store in either the pre- or the post-mutation state;
  * entity versions support compare-and-set updates; all transactions run
    under one writer lock, which makes them trivially serializable;
  * reads never block writers: a snapshot is an O(n) copy of the entity map
    taken under the lock, immutable afterwards;
  * every committed transaction with writes carries exactly one audit entry.

Recovery replays complete journal lines and truncates a torn tail (a line
that does not parse or lacks its trailing newline never happened).
"""

from __future__ import annotations

import copy
import fcntl
import json
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import NotFound, StaleVersion, StoreLocked

EPOCH_TS = "1970-01-01T00:00:00+00:00"


def _utc_iso(epoch_seconds: float) -> str:
    return datetime.fromtimestamp(epoch_seconds, tz=timezone.utc).isoformat()


@dataclass(frozen=True)
class AuditEntry:
    n: int
    ts: str
    actor: str
    operation: str
    entity: str
    old_version: int | None
    new_version: int | None

    def to_dict(self) -> dict:
        return {
            "n": self.n, "ts": self.ts, "actor": self.actor,
            "operation": self.operation, "entity": self.entity,
            "old_version": self.old_version, "new_version": self.new_version,
        }


class Snapshot:
    """Immutable view of the store at one commit token."""

    def __init__(self, token: int, ts: str, entities: dict):
        self.token = token
        self.ts = ts
        self._entities = entities

    def get(self, kind: str, entity_id: str):
        entry = self._entities.get((kind, entity_id))
        if entry is None:
            return None
        version, data = entry
        return version, copy.deepcopy(data)

    def require(self, kind: str, entity_id: str):
        entry = self.get(kind, entity_id)
        if entry is None:
            raise NotFound(f"{kind}:{entity_id}")
        return entry

    def exists(self, kind: str, entity_id: str) -> bool:
        return (kind, entity_id) in self._entities

    def list(self, kind: str):
        items = [
            (entity_id, version, copy.deepcopy(data))
            for (k, entity_id), (version, data) in self._entities.items()
            if k == kind
        ]
        items.sort(key=lambda item: item[0])
        return items

    # Raw accessors return the stored objects themselves: read-only use in
    # hot scan paths (decisions, integrity checks, conflict detection).
    # Callers must never mutate the results.

    def get_raw(self, kind: str, entity_id: str):
        return self._entities.get((kind, entity_id))

    def iter_raw(self, kind: str):
        items = [
            (entity_id, version, data)
            for (k, entity_id), (version, data) in self._entities.items()
            if k == kind
        ]
        items.sort(key=lambda item: item[0])
        return items

    def count(self) -> int:
        return len(self._entities)


class Transaction:
    """Write buffer over the locked store state.

    ``put``/``delete`` check expected versions against the committed state
    (stable while the lock is held) and stage the write; nothing is visible
    or durable until the transaction commits as one journal line.
    """

    def __init__(self, store: "Store", actor: str, operation: str):
        self._store = store
        self.actor = actor
        self.operation = operation
        self._writes: dict[tuple[str, str], tuple[int, dict] | None] = {}
        self._order: list[tuple[str, str]] = []
        self._primary: tuple[str, str] | None = None
        self._old_versions: dict[tuple[str, str], int | None] = {}

    # -- read side (committed state overlaid with staged writes) --

    def get(self, kind: str, entity_id: str):
        key = (kind, entity_id)
        if key in self._writes:
            staged = self._writes[key]
            if staged is None:
                return None
            version, data = staged
            return version, copy.deepcopy(data)
        entry = self._store._entities.get(key)
        if entry is None:
            return None
        version, data = entry
        return version, copy.deepcopy(data)

    def require(self, kind: str, entity_id: str):
        entry = self.get(kind, entity_id)
        if entry is None:
            raise NotFound(f"{kind}:{entity_id}")
        return entry

    def exists(self, kind: str, entity_id: str) -> bool:
        return self.get(kind, entity_id) is not None

    def list(self, kind: str):
        return [
            (entity_id, version, copy.deepcopy(data))
            for entity_id, version, data in self.iter_raw(kind)
        ]

    def get_raw(self, kind: str, entity_id: str):
        key = (kind, entity_id)
        if key in self._writes:
            return self._writes[key]
        return self._store._entities.get(key)

    def iter_raw(self, kind: str):
        combined = {}
        for (k, entity_id), entry in self._store._entities.items():
            if k == kind:
                combined[entity_id] = entry
        for (k, entity_id), staged in self._writes.items():
            if k != kind:
                continue
            if staged is None:
                combined.pop(entity_id, None)
            else:
                combined[entity_id] = staged
        return sorted(
            (entity_id, version, data)
            for entity_id, (version, data) in combined.items()
        )

    # -- write side --

    def put(self, kind: str, entity_id: str, data: dict,
            expected_version: int | None = None) -> int:
        key = (kind, entity_id)
        current = self.get(kind, entity_id)
        current_version = current[0] if current else None
        if expected_version is not None and expected_version != current_version:
            raise StaleVersion(
                f"{kind}:{entity_id}: expected version {expected_version}, "
                f"stored {current_version}"
            )
        new_version = (current_version or 0) + 1
        if key not in self._old_versions:
            self._old_versions[key] = current_version
        if key not in self._writes:
            self._order.append(key)
        self._writes[key] = (new_version, copy.deepcopy(data))
        if self._primary is None:
            self._primary = key
        return new_version

    def delete(self, kind: str, entity_id: str,
               expected_version: int | None = None) -> None:
        key = (kind, entity_id)
        current = self.get(kind, entity_id)
        if current is None:
            raise NotFound(f"{kind}:{entity_id}")
        if expected_version is not None and expected_version != current[0]:
            raise StaleVersion(
                f"{kind}:{entity_id}: expected version {expected_version}, "
                f"stored {current[0]}"
            )
        if key not in self._old_versions:
            self._old_versions[key] = current[0]
        if key not in self._writes:
            self._order.append(key)
        self._writes[key] = None
        if self._primary is None:
            self._primary = key

    def set_primary(self, kind: str, entity_id: str) -> None:
        """Entity named in the audit entry (defaults to the first write)."""
        self._primary = (kind, entity_id)

    @property
    def has_writes(self) -> bool:
        return bool(self._writes)


class Store:
    """Journal-backed entity store.  ``journal_path=None`` keeps everything
    in memory (tests, dry runs)."""

    def __init__(self, journal_path: str | Path | None = None, *,
                 clock=time.time, lock_file: bool = True):
        self._clock = clock
        self._lock = threading.RLock()
        self._entities: dict[tuple[str, str], tuple[int, dict]] = {}
        self._audit: list[AuditEntry] = []
        self._token = 0
        self._ts = EPOCH_TS
        self._journal_path = Path(journal_path) if journal_path else None
        self._fh = None
        # Test hook: called with a phase name at fixed points of the commit
        # path; raising simulates the process dying there.
        self.crash_hook = None
        if self._journal_path is not None:
            self._journal_path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self._journal_path, "a+b")
            if lock_file:
                try:
                    fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
                except OSError:
                    self._fh.close()
                    self._fh = None
                    raise StoreLocked(f"{self._journal_path} is in use by another process")
            self._recover()

    # -- recovery --

    def _recover(self) -> None:
        self._fh.seek(0)
        raw = self._fh.read()
        valid_end = 0
        offset = 0
        while offset < len(raw):
            newline = raw.find(b"\n", offset)
            if newline == -1:
                break  # torn tail: line never committed
            line = raw[offset:newline]
            try:
                record = json.loads(line.decode("utf-8"))
                self._apply_record(record)
            except (ValueError, KeyError, TypeError):
                break  # corrupt line and everything after it is discarded
            valid_end = newline + 1
            offset = newline + 1
        if valid_end != len(raw):
            self._fh.truncate(valid_end)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        self._fh.seek(0, os.SEEK_END)

    def _apply_record(self, record: dict) -> None:
        n = record["n"]
        ts = record["ts"]
        for kind, entity_id, version, data in record["writes"]:
            key = (kind, entity_id)
            if data is None:
                self._entities.pop(key, None)
            else:
                self._entities[key] = (version, data)
        audit = record["audit"]
        self._audit.append(AuditEntry(
            n=n, ts=ts, actor=record["actor"], operation=record["op"],
            entity=audit["entity"], old_version=audit["old"],
            new_version=audit["new"],
        ))
        self._token = n
        self._ts = ts

    # -- public surface --

    def snapshot(self) -> Snapshot:
        with self._lock:
            return Snapshot(self._token, self._ts, dict(self._entities))

    def transaction(self, actor: str, operation: str) -> "_TransactionContext":
        return _TransactionContext(self, actor, operation)

    def audit_entries(self) -> list[AuditEntry]:
        with self._lock:
            return list(self._audit)

    @property
    def token(self) -> int:
        with self._lock:
            return self._token

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    # -- commit path (lock held) --

    def _commit(self, txn: Transaction) -> None:
        if not txn.has_writes:
            return
        n = self._token + 1
        ts = _utc_iso(self._clock())
        writes = []
        for key in txn._order:
            kind, entity_id = key
            staged = txn._writes[key]
            if staged is None:
                writes.append([kind, entity_id, 0, None])
            else:
                writes.append([kind, entity_id, staged[0], staged[1]])
        primary = txn._primary
        old_version = txn._old_versions.get(primary)
        staged_primary = txn._writes.get(primary)
        new_version = staged_primary[0] if staged_primary is not None else None
        record = {
            "n": n, "ts": ts, "actor": txn.actor, "op": txn.operation,
            "writes": writes,
            "audit": {
                "entity": f"{primary[0]}:{primary[1]}",
                "old": old_version, "new": new_version,
            },
        }
        self._fire_crash_hook("pre-append")
        if self._fh is not None:
            line = (json.dumps(record, ensure_ascii=False,
                               separators=(",", ":")) + "\n").encode("utf-8")
            half = len(line) // 2
            self._fh.write(line[:half])
            self._fh.flush()
            self._fire_crash_hook("mid-append")
            self._fh.write(line[half:])
            self._fh.flush()
            os.fsync(self._fh.fileno())
        self._fire_crash_hook("post-append")
        for key in txn._order:
            staged = txn._writes[key]
            if staged is None:
                self._entities.pop(key, None)
            else:
                self._entities[key] = staged
        self._audit.append(AuditEntry(
            n=n, ts=ts, actor=txn.actor, operation=txn.operation,
            entity=f"{primary[0]}:{primary[1]}",
            old_version=old_version, new_version=new_version,
        ))
        self._token = n
        self._ts = ts

    def _fire_crash_hook(self, phase: str) -> None:
        if self.crash_hook is not None:
            self.crash_hook(phase)


class _TransactionContext:
    def __init__(self, store: Store, actor: str, operation: str):
        self._store = store
        self._actor = actor
        self._operation = operation
        self._txn: Transaction | None = None

    def __enter__(self) -> Transaction:
        self._store._lock.acquire()
        self._txn = Transaction(self._store, self._actor, self._operation)
        return self._txn

    def __exit__(self, exc_type, exc, tb) -> bool:
        try:
            if exc_type is None:
                self._store._commit(self._txn)
        finally:
            self._store._lock.release()
        return False
