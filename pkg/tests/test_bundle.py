import random

import pytest

from handbook.bundle import bundle_bytes, export_bundle, import_bundle, load_bundle
from handbook.errors import StoreNotEmpty, ValidationFailed
from handbook.store import Store

from .conftest import World, date_slot, make_service


def _sample_bundle():
    return {
        "format": "handbook-bundle/1",
        "persons": [
            {"id": "alice", "display_name": "Alice", "login_name": "alice"},
            {"id": "bob", "display_name": "Bob", "login_name": "bob"},
        ],
        "institutions": [
            {"id": "inst-a", "name": "Institute A", "head_id": "alice",
             "member_ids": ["alice", "bob"]},
        ],
        "terms": [{"id": "2008S", "schedule_freeze_date": "2008-07-01"}],
        "lectures": [
            {"id": "lec-1", "title": "Databases", "institution_id": "inst-a",
             "lecturer_ids": ["bob"], "term_id": "2008S",
             "dates": [date_slot("Mon", "10:00", "12:00", "R1")]},
        ],
        "modules": [
            {"id": "mod-1", "title": "Data", "institution_id": "inst-a",
             "responsible_id": "bob", "lecturer_ids": ["bob"],
             "lecture_ids": ["lec-1"]},
        ],
        "programs": [
            {"id": "prog-1", "title": "SE", "kind": "TWO_CYCLE", "dean_id": "alice"},
        ],
        "categories": [
            {"id": "cat-1", "title": "Core", "program_id": "prog-1", "position": 0},
        ],
        "grants": [
            {"id": "grant-1", "grantee_id": "bob", "role": "INSTITUTION_EDITOR",
             "scope_id": "inst-a", "granter_id": "alice",
             "granted_at": "2008-01-01T00:00:00+00:00"},
        ],
        "inclusions": [
            {"id": "inc-1", "module_id": "mod-1", "program_id": "prog-1",
             "category_id": "cat-1",
             "history": [
                 {"actor": "bob", "action": "propose:module",
                  "at": "2008-01-02T00:00:00+00:00"},
                 {"actor": "alice", "action": "ack:program",
                  "at": "2008-01-03T00:00:00+00:00"},
             ]},
        ],
        "credentials": {"alice": "alice-pw", "bob": "bob-pw"},
    }


def test_import_populates_empty_store():
    store = Store(None)
    result = import_bundle(store, _sample_bundle())
    assert result["entities"] == 10
    snap = store.snapshot()
    assert snap.get("person", "alice")[1]["display_name"] == "Alice"
    assert snap.get("inclusion", "inc-1")[1]["state"] == "ACKNOWLEDGED"
    # one bulk mutation, one audit entry
    assert len(store.audit_entries()) == 1


def test_import_requires_empty_store():
    store = Store(None)
    import_bundle(store, _sample_bundle())
    with pytest.raises(StoreNotEmpty):
        import_bundle(store, _sample_bundle())


def test_import_dangling_reference_names_entity():
    broken = _sample_bundle()
    broken["modules"][0]["institution_id"] = "inst-missing"
    store = Store(None)
    with pytest.raises(ValidationFailed) as err:
        import_bundle(store, broken)
    assert "mod-1" in err.value.message
    assert store.snapshot().count() == 0  # nothing imported


def test_import_rejects_flag_history_mismatch():
    broken = _sample_bundle()
    broken["inclusions"][0]["state"] = "PENDING"
    store = Store(None)
    with pytest.raises(ValidationFailed) as err:
        import_bundle(store, broken)
    assert "inc-1" in err.value.message


def test_import_rejects_duplicate_active_triples():
    broken = _sample_bundle()
    broken["inclusions"].append({
        "id": "inc-2", "module_id": "mod-1", "program_id": "prog-1",
        "category_id": "cat-1",
        "history": [{"actor": "bob", "action": "propose:module", "at": "x"}],
    })
    store = Store(None)
    with pytest.raises(ValidationFailed):
        import_bundle(store, broken)


def test_export_import_export_is_byte_identical():
    store = Store(None)
    import_bundle(store, _sample_bundle())
    first = bundle_bytes(export_bundle(store.snapshot()))

    fresh = Store(None)
    import_bundle(fresh, load_bundle_from_bytes(first))
    second = bundle_bytes(export_bundle(fresh.snapshot()))
    assert first == second


def load_bundle_from_bytes(data: bytes) -> dict:
    import json
    return json.loads(data.decode("utf-8"))


def _random_world() -> World:
    service = make_service()
    w = World(service)
    rng = random.Random(1234)
    people = [w.person(f"p{i}") for i in range(6)]
    insts = [w.institution(f"I{i}", people[i], people) for i in range(2)]
    w.term("2008S", freeze="2008-07-01")
    lectures = [
        w.lecture(f"L{i}", rng.choice(insts), "2008S",
                  lecturers=rng.sample(people, rng.randint(0, 2)),
                  dates=[date_slot(rng.choice(["Mon", "Tue", "2008-05-05"]),
                                   "10:00", "12:00", f"R{rng.randint(1, 3)}")
                         for _ in range(rng.randint(0, 2))])
        for i in range(5)
    ]
    topics = [w.topic(f"T{i}", {"2008S": rng.sample(lectures, 2)}) for i in range(2)]
    modules = [
        w.module(f"M{i}", rng.choice(insts), rng.choice(people),
                 lecturers=rng.sample(people, 1),
                 lectures=rng.sample(lectures, rng.randint(0, 2)),
                 topics=rng.sample(topics, rng.randint(0, 2)),
                 attributes={"credits": str(rng.randint(3, 10))})
        for i in range(4)
    ]
    programs = [w.program(f"Prog{i}", "TWO_CYCLE", rng.choice(people)) for i in range(2)]
    single = w.program("Single", "SINGLE_CYCLE", people[0],
                       lectures=rng.sample(lectures, 2))
    cats = [w.category(p, f"Cat{i}", i) for p in programs for i in range(2)]
    for i, m in enumerate(modules):
        record = w.service.propose_inclusion(w.admin, m, programs[i % 2],
                                             cats[(i % 2) * 2])
        if i % 2 == 0:
            w.service.revoke_inclusion(w.admin, record["id"])
    w.grant(people[1], "INSTITUTION_EDITOR", insts[0])
    w.grant(people[2], "PROGRAM_RESPONSIBLE", programs[0])
    return w


def test_randomized_store_round_trips_losslessly():
    w = _random_world()
    snap = w.snapshot()
    first_bundle = export_bundle(snap)
    first = bundle_bytes(first_bundle)

    fresh = Store(None)
    import_bundle(fresh, load_bundle_from_bytes(first))
    fresh_snap = fresh.snapshot()
    second = bundle_bytes(export_bundle(fresh_snap))
    assert first == second

    # deep equality of domain content, not just bytes
    for kind in ("person", "institution", "term", "lecture", "topic",
                 "module", "program", "category", "grant", "inclusion"):
        original = {(eid): data for eid, _v, data in snap.list(kind)}
        reimported = {(eid): data for eid, _v, data in fresh_snap.list(kind)}
        assert original == reimported, kind


def test_admin_propose_is_both_sides():
    # exercised above via propose(admin): record is immediately acknowledged
    w = _random_world()
    snap = w.snapshot()
    states = {rec["state"] for _rid, _v, rec in snap.list("inclusion")}
    assert states <= {"ACKNOWLEDGED", "REVOKED"}
