import json
import threading

import pytest

from handbook.errors import NotFound, StaleVersion, StoreLocked
from handbook.store import Store


class Crash(Exception):
    pass


def _put_person(store, pid, name, expected_version=None):
    with store.transaction("tester", "put") as txn:
        txn.put("person", pid, {"display_name": name, "login_name": pid},
                expected_version=expected_version)


def test_put_get_roundtrip():
    store = Store(None)
    _put_person(store, "p1", "One")
    version, data = store.snapshot().get("person", "p1")
    assert version == 1
    assert data["display_name"] == "One"


def test_cas_update_increments_and_conflicts():
    store = Store(None)
    _put_person(store, "p1", "One")
    _put_person(store, "p1", "Two", expected_version=1)
    assert store.snapshot().get("person", "p1")[0] == 2
    with pytest.raises(StaleVersion):
        _put_person(store, "p1", "Three", expected_version=1)
    assert store.snapshot().get("person", "p1")[1]["display_name"] == "Two"


def test_concurrent_cas_exactly_one_wins():
    store = Store(None)
    _put_person(store, "p1", "Base")
    outcomes = []

    def writer(tag):
        try:
            _put_person(store, "p1", tag, expected_version=1)
            outcomes.append(("ok", tag))
        except StaleVersion:
            outcomes.append(("stale", tag))

    threads = [threading.Thread(target=writer, args=(f"w{i}",)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sum(1 for kind, _ in outcomes if kind == "ok") == 1
    assert store.snapshot().get("person", "p1")[0] == 2


def test_snapshot_is_isolated_from_later_writes():
    store = Store(None)
    _put_person(store, "p1", "One")
    snap = store.snapshot()
    _put_person(store, "p1", "Two", expected_version=1)
    assert snap.get("person", "p1")[1]["display_name"] == "One"
    assert store.snapshot().get("person", "p1")[1]["display_name"] == "Two"


def test_snapshot_copies_are_not_aliased():
    store = Store(None)
    _put_person(store, "p1", "One")
    snap = store.snapshot()
    _v, data = snap.get("person", "p1")
    data["display_name"] = "mutated"
    assert snap.get("person", "p1")[1]["display_name"] == "One"


def test_transaction_rollback_on_error():
    store = Store(None)
    with pytest.raises(RuntimeError):
        with store.transaction("tester", "boom") as txn:
            txn.put("person", "p1", {"display_name": "X", "login_name": "p1"})
            raise RuntimeError("abort")
    assert store.snapshot().get("person", "p1") is None
    assert store.audit_entries() == []


def test_delete_missing_raises():
    store = Store(None)
    with pytest.raises(NotFound):
        with store.transaction("tester", "del") as txn:
            txn.delete("person", "nope")


def test_audit_one_entry_per_mutation():
    store = Store(None)
    _put_person(store, "p1", "One")
    _put_person(store, "p2", "Two")
    _put_person(store, "p1", "One b", expected_version=1)
    entries = store.audit_entries()
    assert len(entries) == 3
    assert [e.n for e in entries] == [1, 2, 3]
    assert entries[2].old_version == 1 and entries[2].new_version == 2


def test_empty_transaction_writes_nothing():
    store = Store(None)
    with store.transaction("tester", "noop"):
        pass
    assert store.token == 0
    assert store.audit_entries() == []


def test_durability_across_reopen(tmp_path):
    path = tmp_path / "journal.jsonl"
    store = Store(path)
    _put_person(store, "p1", "One")
    _put_person(store, "p1", "Two", expected_version=1)
    store.close()

    reopened = Store(path)
    assert reopened.snapshot().get("person", "p1") == (2, {
        "display_name": "Two", "login_name": "p1"})
    assert len(reopened.audit_entries()) == 2
    assert reopened.token == 2
    reopened.close()


def test_recovery_discards_torn_tail(tmp_path):
    path = tmp_path / "journal.jsonl"
    store = Store(path)
    _put_person(store, "p1", "One")
    _put_person(store, "p2", "Two")
    store.close()

    raw = path.read_bytes()
    # cut into the middle of the second record
    lines = raw.split(b"\n")
    torn = lines[0] + b"\n" + lines[1][: len(lines[1]) // 2]
    path.write_bytes(torn)

    reopened = Store(path)
    assert reopened.snapshot().get("person", "p1") is not None
    assert reopened.snapshot().get("person", "p2") is None
    assert reopened.token == 1
    # the torn bytes were truncated away; appending works again
    _put_person(reopened, "p3", "Three")
    reopened.close()
    final = Store(path)
    assert final.snapshot().get("person", "p3") is not None
    final.close()


def test_crash_mid_append_leaves_old_state(tmp_path):
    path = tmp_path / "journal.jsonl"
    store = Store(path)
    _put_person(store, "p1", "One")

    def crash(phase):
        if phase == "mid-append":
            raise Crash(phase)

    store.crash_hook = crash
    with pytest.raises(Crash):
        _put_person(store, "p1", "Two", expected_version=1)
    store.close()

    reopened = Store(path)
    assert reopened.snapshot().get("person", "p1")[1]["display_name"] == "One"
    assert reopened.token == 1
    reopened.close()


def test_crash_post_append_keeps_new_state(tmp_path):
    path = tmp_path / "journal.jsonl"
    store = Store(path)
    _put_person(store, "p1", "One")

    def crash(phase):
        if phase == "post-append":
            raise Crash(phase)

    store.crash_hook = crash
    with pytest.raises(Crash):
        _put_person(store, "p1", "Two", expected_version=1)
    store.close()

    reopened = Store(path)
    assert reopened.snapshot().get("person", "p1")[1]["display_name"] == "Two"
    assert reopened.token == 2
    reopened.close()


def test_multi_write_transaction_is_atomic_in_journal(tmp_path):
    path = tmp_path / "journal.jsonl"
    store = Store(path)
    with store.transaction("tester", "bulk") as txn:
        txn.put("person", "p1", {"display_name": "A", "login_name": "p1"})
        txn.put("person", "p2", {"display_name": "B", "login_name": "p2"})
    store.close()
    lines = [l for l in path.read_bytes().split(b"\n") if l]
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert len(record["writes"]) == 2


def test_exclusive_lock(tmp_path):
    path = tmp_path / "journal.jsonl"
    store = Store(path)
    with pytest.raises(StoreLocked):
        Store(path)
    store.close()
    second = Store(path)
    second.close()
