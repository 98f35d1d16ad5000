"""Two-sided acknowledgment protocol for module-into-program inclusion.

A module enters a program's category "under reserve": the record starts
PENDING with only the proposer's side acknowledged and becomes ACKNOWLEDGED
once both the module side and the program side agreed.  Only ACKNOWLEDGED
records make a module visible to catalog generation.  REVOKED is terminal.
Every transition appends to the record's history; the current flags and state
are always a pure fold over that history.
"""

from __future__ import annotations

from .entities import TWO_CYCLE, new_id, resolve_module_lectures, ordered_categories
from .errors import Duplicate, Forbidden, InvalidState, KindMismatch, NotFound, ValidationFailed

PENDING = "PENDING"
ACKNOWLEDGED = "ACKNOWLEDGED"
REVOKED = "REVOKED"

MODULE_SIDE = "module"
PROGRAM_SIDE = "program"


def _history_entry(actor_id: str, action: str, ts: str) -> dict:
    return {"actor": actor_id, "action": action, "at": ts}


def _state_from_flags(lecturer_ack: bool, dean_ack: bool) -> str:
    return ACKNOWLEDGED if (lecturer_ack and dean_ack) else PENDING


def fold_history(history: list[dict]) -> dict:
    """Replay a record's history into (lecturer_ack, dean_ack, state).

    This is the reference interpretation of the event log: the stored flags
    and state must always equal the fold of the stored history.
    """
    lecturer_ack = False
    dean_ack = False
    revoked = False
    for event in history:
        action = event["action"]
        if revoked:
            raise ValueError(f"event {action!r} after revocation")
        if action in ("propose:module", "ack:module"):
            lecturer_ack = True
        elif action in ("propose:program", "ack:program"):
            dean_ack = True
        elif action == "propose:both":
            lecturer_ack = True
            dean_ack = True
        elif action == "revoke":
            revoked = True
        else:
            raise ValueError(f"unknown history action {action!r}")
    state = REVOKED if revoked else _state_from_flags(lecturer_ack, dean_ack)
    return {"lecturer_ack": lecturer_ack, "dean_ack": dean_ack, "state": state}


def find_active_record(view, module_id: str, program_id: str, category_id: str):
    """The at-most-one non-REVOKED record for the triple."""
    for rec_id, version, record in view.iter_raw("inclusion"):
        if (record["module_id"], record["program_id"], record["category_id"]) \
                == (module_id, program_id, category_id) \
                and record["state"] != REVOKED:
            return rec_id, version, record
    return None


def propose(txn, sides: set[str], actor_id: str, module_id: str,
            program_id: str, category_id: str, ts: str) -> tuple[str, dict]:
    txn.require("module", module_id)
    _pver, program = txn.require("program", program_id)
    _cver, category = txn.require("category", category_id)
    if program["kind"] != TWO_CYCLE:
        raise KindMismatch(f"program:{program_id} is SINGLE_CYCLE; modules join TWO_CYCLE programs")
    if category["program_id"] != program_id:
        raise ValidationFailed(
            f"category:{category_id} belongs to program {category['program_id']}, not {program_id}"
        )
    if not sides:
        raise Forbidden("not-inclusion-party")
    if find_active_record(txn, module_id, program_id, category_id) is not None:
        raise Duplicate(
            f"module:{module_id} already proposed for program:{program_id}/category:{category_id}"
        )
    if sides == {MODULE_SIDE, PROGRAM_SIDE}:
        action = "propose:both"
    elif MODULE_SIDE in sides:
        action = "propose:module"
    else:
        action = "propose:program"
    history = [_history_entry(actor_id, action, ts)]
    folded = fold_history(history)
    record = {
        "module_id": module_id,
        "program_id": program_id,
        "category_id": category_id,
        "lecturer_ack": folded["lecturer_ack"],
        "dean_ack": folded["dean_ack"],
        "state": folded["state"],
        "history": history,
    }
    rec_id = new_id("inclusion")
    txn.put("inclusion", rec_id, record)
    return rec_id, record


def acknowledge(txn, sides: set[str], actor_id: str, record_id: str, ts: str) -> dict:
    version, record = txn.require("inclusion", record_id)
    if record["state"] == REVOKED:
        raise InvalidState(f"inclusion:{record_id} is revoked")
    if record["state"] == ACKNOWLEDGED:
        raise InvalidState(f"inclusion:{record_id} is already acknowledged by both sides")
    open_sides = set()
    if not record["lecturer_ack"]:
        open_sides.add(MODULE_SIDE)
    if not record["dean_ack"]:
        open_sides.add(PROGRAM_SIDE)
    actionable = sides & open_sides
    if not actionable:
        # wrong side (their side already agreed) or no standing at all
        raise Forbidden("wrong-side" if sides else "not-inclusion-party")
    # open_sides has exactly one element for any record created by propose()
    side = sorted(actionable)[0]
    record["history"] = record["history"] + [
        _history_entry(actor_id, f"ack:{side}", ts)
    ]
    folded = fold_history(record["history"])
    record.update(folded)
    txn.put("inclusion", record_id, record, expected_version=version)
    return record


def revoke(txn, sides: set[str], actor_id: str, record_id: str, ts: str) -> dict:
    version, record = txn.require("inclusion", record_id)
    if record["state"] == REVOKED:
        raise InvalidState(f"inclusion:{record_id} is already revoked")
    if not sides:
        raise Forbidden("not-inclusion-party")
    record["history"] = record["history"] + [_history_entry(actor_id, "revoke", ts)]
    record.update(fold_history(record["history"]))
    txn.put("inclusion", record_id, record, expected_version=version)
    return record


def effective_modules(view, program_id: str) -> list[tuple[str, list[str]]]:
    """Per category (in program order), the modules whose inclusion is fully
    acknowledged, ordered by module title then id."""
    entry = view.get_raw("program", program_id)
    if entry is None:
        raise NotFound(f"program:{program_id}")
    if entry[1]["kind"] != TWO_CYCLE:
        raise KindMismatch(f"program:{program_id} is SINGLE_CYCLE and has no module categories")
    acknowledged: dict[str, set[str]] = {}
    for _rid, _v, record in view.iter_raw("inclusion"):
        if record["program_id"] == program_id and record["state"] == ACKNOWLEDGED:
            acknowledged.setdefault(record["category_id"], set()).add(record["module_id"])
    result = []
    for cat_id, _cat in ordered_categories(view, program_id):
        module_ids = acknowledged.get(cat_id, set())
        def sort_key(mid):
            mod_entry = view.get_raw("module", mid)
            title = mod_entry[1]["title"] if mod_entry else ""
            return (title, mid)
        result.append((cat_id, sorted(module_ids, key=sort_key)))
    return result


def reachable_lectures(view, program_id: str, term_id: str) -> set[str]:
    """Lectures a program's timetable is affected by in a term.

    SINGLE_CYCLE: the direct lecture set.  TWO_CYCLE: lectures resolved from
    modules with an ACKNOWLEDGED inclusion (pending modules contribute no
    program conflicts).
    """
    entry = view.get_raw("program", program_id)
    if entry is None:
        raise NotFound(f"program:{program_id}")
    _ver, program = entry
    if program["kind"] != TWO_CYCLE:
        return set(program["lecture_ids"])
    lectures: set[str] = set()
    seen_modules: set[str] = set()
    for _rid, _v, record in view.iter_raw("inclusion"):
        if record["program_id"] != program_id or record["state"] != ACKNOWLEDGED:
            continue
        if record["module_id"] in seen_modules:
            continue
        seen_modules.add(record["module_id"])
        lectures.update(resolve_module_lectures(view, record["module_id"], term_id))
    return lectures


def programs_containing_lecture(view, lecture_id: str) -> set[str]:
    """Programs whose content reaches the lecture (its own term for topic
    resolution)."""
    entry = view.get_raw("lecture", lecture_id)
    if entry is None:
        raise NotFound(f"lecture:{lecture_id}")
    term_id = entry[1]["term_id"]
    found = set()
    for prog_id, _v, _program in view.iter_raw("program"):
        if lecture_id in reachable_lectures(view, prog_id, term_id):
            found.add(prog_id)
    return found


def pending_for_person(view, policy, person_id: str) -> list[tuple[str, int, dict]]:
    """Inbox query: PENDING records whose open side the person can act for."""
    out = []
    for rec_id, version, record in view.iter_raw("inclusion"):
        if record["state"] != PENDING:
            continue
        sides = policy.inclusion_sides(view, person_id, record["module_id"], record["program_id"])
        open_sides = set()
        if not record["lecturer_ack"]:
            open_sides.add(MODULE_SIDE)
        if not record["dean_ack"]:
            open_sides.add(PROGRAM_SIDE)
        if sides & open_sides:
            out.append((rec_id, version, record))
    return out
