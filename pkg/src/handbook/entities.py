"""Domain entities: field schemas, normalization, invariants and referential
integrity for the curriculum data model.

Entities are plain dicts keyed by a kind string.  ``normalize_entity`` is the
single write-path gate: it returns a canonical copy or raises
ValidationFailed / DanglingReference.  Read-side helpers (``validate_program``,
``resolve_module_lectures``) operate on any store view exposing
``get(kind, id)`` / ``list(kind)``.
"""

from __future__ import annotations

import re
import uuid
from datetime import date

from .errors import DanglingReference, NotFound, Referenced, ValidationFailed

SINGLE_CYCLE = "SINGLE_CYCLE"
TWO_CYCLE = "TWO_CYCLE"
PROGRAM_KINDS = (SINGLE_CYCLE, TWO_CYCLE)

WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
_WEEKDAY_ALIASES = {
    "mon": "Mon", "monday": "Mon",
    "tue": "Tue", "tues": "Tue", "tuesday": "Tue",
    "wed": "Wed", "wednesday": "Wed",
    "thu": "Thu", "thur": "Thu", "thurs": "Thu", "thursday": "Thu",
    "fri": "Fri", "friday": "Fri",
    "sat": "Sat", "saturday": "Sat",
    "sun": "Sun", "sunday": "Sun",
}

TERM_ID_RE = re.compile(r"^\d{4}[SW]$")
_TIME_RE = re.compile(r"^([01]\d|2[0-3]):[0-5]\d$")
_ISO_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")

# Kinds exposed through the generic CRUD surface.  Grants and inclusion
# records are stored entities too but mutate only through their own ops.
DOMAIN_KINDS = (
    "institution", "person", "program", "category",
    "module", "topic", "lecture", "term",
)
ALL_KINDS = DOMAIN_KINDS + ("grant", "inclusion")

_ID_PREFIX = {
    "institution": "ins", "person": "per", "program": "pro", "category": "cat",
    "module": "mod", "topic": "top", "lecture": "lec", "term": "trm",
    "grant": "grn", "inclusion": "inc",
}


def new_id(kind: str) -> str:
    return f"{_ID_PREFIX[kind]}-{uuid.uuid4().hex[:12]}"


def is_calendar_day(day: str) -> bool:
    return bool(_ISO_DATE_RE.match(day))


def weekday_of(iso_day: str) -> str:
    return WEEKDAYS[date.fromisoformat(iso_day).weekday()]


def _as_str(value, field, errors, *, allow_empty=True) -> str:
    if not isinstance(value, str):
        errors.append(f"{field}: expected string")
        return ""
    if not allow_empty and not value:
        errors.append(f"{field}: must be non-empty")
    if "\x00" in value:
        errors.append(f"{field}: NUL bytes are not allowed")
    return value


def _as_id_list(value, field, errors) -> list[str]:
    if not isinstance(value, (list, tuple, set, frozenset)):
        errors.append(f"{field}: expected list of ids")
        return []
    out = set()
    for item in value:
        if not isinstance(item, str) or not item:
            errors.append(f"{field}: ids must be non-empty strings")
            return []
        out.add(item)
    return sorted(out)


def normalize_lecture_date(raw, errors: list[str], field: str = "dates") -> dict | None:
    if not isinstance(raw, dict):
        errors.append(f"{field}: each date must be an object")
        return None
    unknown = set(raw) - {"day", "start", "end", "room"}
    if unknown:
        errors.append(f"{field}: unknown date fields {sorted(unknown)}")
        return None
    day = raw.get("day")
    start = raw.get("start")
    end = raw.get("end")
    room = raw.get("room")
    ok = True
    if not isinstance(day, str):
        errors.append(f"{field}: day must be a weekday or YYYY-MM-DD")
        ok = False
    elif _ISO_DATE_RE.match(day):
        try:
            date.fromisoformat(day)
        except ValueError:
            errors.append(f"{field}: invalid calendar date {day!r}")
            ok = False
    else:
        canon = _WEEKDAY_ALIASES.get(day.lower())
        if canon is None:
            errors.append(f"{field}: invalid day value {day!r}")
            ok = False
        else:
            day = canon
    for name, value in (("start", start), ("end", end)):
        if not isinstance(value, str) or not _TIME_RE.match(value):
            errors.append(f"{field}: {name} must be HH:MM")
            ok = False
    if ok and not start < end:
        errors.append(f"{field}: start must be before end ({start} >= {end})")
        ok = False
    if not isinstance(room, str) or not room or "\x00" in room:
        errors.append(f"{field}: room must be a non-empty string without NUL bytes")
        ok = False
    if not ok:
        return None
    return {"day": day, "start": start, "end": end, "room": room}


def normalize_dates(raw, errors: list[str]) -> list[dict]:
    if not isinstance(raw, list):
        errors.append("dates: expected a list")
        return []
    out = []
    for item in raw:
        normalized = normalize_lecture_date(item, errors)
        if normalized is not None:
            out.append(normalized)
    return out


# --- per-kind normalizers -------------------------------------------------
# Each returns (canonical_data, reference_list); reference_list holds
# (kind, id) pairs that must exist in the store.

def _norm_institution(data, errors):
    name = _as_str(data.get("name"), "name", errors, allow_empty=False)
    head = _as_str(data.get("head_id"), "head_id", errors, allow_empty=False)
    members = _as_id_list(data.get("member_ids", []), "member_ids", errors)
    if head and head not in members:
        errors.append("head_id: head must also be a member")
    refs = [("person", p) for p in members]
    return {"name": name, "head_id": head, "member_ids": members}, refs


def _norm_person(data, errors):
    display = _as_str(data.get("display_name", ""), "display_name", errors)
    login = _as_str(data.get("login_name"), "login_name", errors, allow_empty=False)
    return {"display_name": display, "login_name": login}, []


def _norm_program(data, errors):
    title = _as_str(data.get("title", ""), "title", errors)
    kind = data.get("kind")
    if kind not in PROGRAM_KINDS:
        errors.append(f"kind: must be one of {PROGRAM_KINDS}")
        kind = SINGLE_CYCLE
    dean = _as_str(data.get("dean_id"), "dean_id", errors, allow_empty=False)
    lectures = _as_id_list(data.get("lecture_ids", []), "lecture_ids", errors)
    if kind == TWO_CYCLE and lectures:
        errors.append("lecture_ids: a TWO_CYCLE program references no lectures directly")
    refs = [("person", dean)] + [("lecture", l) for l in lectures]
    return {"title": title, "kind": kind, "dean_id": dean, "lecture_ids": lectures}, refs


def _norm_category(data, errors):
    title = _as_str(data.get("title", ""), "title", errors)
    program = _as_str(data.get("program_id"), "program_id", errors, allow_empty=False)
    position = data.get("position", 0)
    if not isinstance(position, int) or isinstance(position, bool) or position < 0:
        errors.append("position: must be a non-negative integer")
        position = 0
    return {"title": title, "program_id": program, "position": position}, [("program", program)]


def _norm_module(data, errors):
    title = _as_str(data.get("title", ""), "title", errors)
    description = _as_str(data.get("description", ""), "description", errors)
    institution = _as_str(data.get("institution_id"), "institution_id", errors, allow_empty=False)
    responsible = _as_str(data.get("responsible_id"), "responsible_id", errors, allow_empty=False)
    lecturers = _as_id_list(data.get("lecturer_ids", []), "lecturer_ids", errors)
    lectures = _as_id_list(data.get("lecture_ids", []), "lecture_ids", errors)
    topics = _as_id_list(data.get("topic_ids", []), "topic_ids", errors)
    attributes = data.get("attributes", {})
    if not isinstance(attributes, dict) or not all(
        isinstance(k, str) and isinstance(v, str) and "\x00" not in k and "\x00" not in v
        for k, v in attributes.items()
    ):
        errors.append("attributes: must be a string-to-string map without NUL bytes")
        attributes = {}
    refs = (
        [("institution", institution), ("person", responsible)]
        + [("person", p) for p in lecturers]
        + [("lecture", l) for l in lectures]
        + [("topic", t) for t in topics]
    )
    return {
        "title": title,
        "description": description,
        "institution_id": institution,
        "responsible_id": responsible,
        "lecturer_ids": lecturers,
        "lecture_ids": lectures,
        "topic_ids": topics,
        "attributes": dict(sorted(attributes.items())),
    }, refs


def _norm_topic(data, errors):
    title = _as_str(data.get("title", ""), "title", errors)
    raw = data.get("assignments", {})
    assignments: dict[str, list[str]] = {}
    refs: list[tuple[str, str]] = []
    if not isinstance(raw, dict):
        errors.append("assignments: expected a map of term id to lecture ids")
    else:
        for term_id, lecture_ids in raw.items():
            if not isinstance(term_id, str):
                errors.append("assignments: term ids must be strings")
                continue
            ids = _as_id_list(lecture_ids, f"assignments[{term_id}]", errors)
            assignments[term_id] = ids
            refs.append(("term", term_id))
            refs.extend(("lecture", l) for l in ids)
    return {"title": title, "assignments": dict(sorted(assignments.items()))}, refs


def _norm_lecture(data, errors):
    title = _as_str(data.get("title", ""), "title", errors)
    description = _as_str(data.get("description", ""), "description", errors)
    institution = _as_str(data.get("institution_id"), "institution_id", errors, allow_empty=False)
    lecturers = _as_id_list(data.get("lecturer_ids", []), "lecturer_ids", errors)
    term = _as_str(data.get("term_id"), "term_id", errors, allow_empty=False)
    dates = normalize_dates(data.get("dates", []), errors)
    refs = [("institution", institution), ("term", term)] + [("person", p) for p in lecturers]
    return {
        "title": title,
        "description": description,
        "institution_id": institution,
        "lecturer_ids": lecturers,
        "term_id": term,
        "dates": dates,
    }, refs


def _norm_term(data, errors):
    term_id = data.get("id")
    if not isinstance(term_id, str) or not TERM_ID_RE.match(term_id):
        errors.append("id: term id must match <4-digit year><S|W>, e.g. 2008S")
        term_id = ""
    freeze = data.get("schedule_freeze_date")
    if not isinstance(freeze, str) or not _ISO_DATE_RE.match(freeze):
        errors.append("schedule_freeze_date: must be YYYY-MM-DD")
        freeze = "1970-01-01"
    else:
        try:
            date.fromisoformat(freeze)
        except ValueError:
            errors.append(f"schedule_freeze_date: invalid date {freeze!r}")
            freeze = "1970-01-01"
    return {"id": term_id, "schedule_freeze_date": freeze}, []


_NORMALIZERS = {
    "institution": _norm_institution,
    "person": _norm_person,
    "program": _norm_program,
    "category": _norm_category,
    "module": _norm_module,
    "topic": _norm_topic,
    "lecture": _norm_lecture,
    "term": _norm_term,
}

_KNOWN_FIELDS = {
    "institution": {"name", "head_id", "member_ids"},
    "person": {"display_name", "login_name"},
    "program": {"title", "kind", "dean_id", "lecture_ids"},
    "category": {"title", "program_id", "position"},
    "module": {"title", "description", "institution_id", "responsible_id",
               "lecturer_ids", "lecture_ids", "topic_ids", "attributes"},
    "topic": {"title", "assignments"},
    "lecture": {"title", "description", "institution_id", "lecturer_ids",
                "term_id", "dates"},
    "term": {"id", "schedule_freeze_date"},
}


def normalize_entity(kind: str, data: dict, view=None, *, entity_id: str | None = None) -> dict:
    """Validate and canonicalize ``data`` for ``kind``.

    With a store ``view``, referenced entities must exist (DanglingReference)
    and store-wide invariants (login_name uniqueness, category target kind)
    are enforced.  ``entity_id`` identifies the entity being updated so that
    uniqueness checks can skip it.
    """
    if kind not in _NORMALIZERS:
        raise ValidationFailed(f"unknown entity kind {kind!r}")
    if not isinstance(data, dict):
        raise ValidationFailed(f"{kind}: expected an object")
    unknown = set(data) - _KNOWN_FIELDS[kind]
    errors: list[str] = []
    if unknown:
        errors.append(f"unknown fields {sorted(unknown)}")
    canonical, refs = _NORMALIZERS[kind](data, errors)
    if errors:
        raise ValidationFailed(f"{kind}: " + "; ".join(errors), details=errors)

    if view is not None:
        missing = sorted({
            f"{rk}:{rid}" for rk, rid in refs if view.get(rk, rid) is None
        })
        if missing:
            raise DanglingReference(
                f"{kind}: references to missing entities: {', '.join(missing)}",
                details=missing,
            )
        _check_store_invariants(kind, canonical, view, entity_id, errors)
        if errors:
            raise ValidationFailed(f"{kind}: " + "; ".join(errors), details=errors)
    return canonical


def _check_store_invariants(kind, data, view, entity_id, errors):
    if kind == "person":
        for other_id, _ver, other in view.iter_raw("person"):
            if other_id != entity_id and other["login_name"] == data["login_name"]:
                errors.append(f"login_name: {data['login_name']!r} already taken by {other_id}")
                break
    elif kind == "category":
        entry = view.get("program", data["program_id"])
        if entry is not None and entry[1]["kind"] != TWO_CYCLE:
            errors.append("program_id: categories belong to TWO_CYCLE programs only")
    elif kind == "program" and entity_id is not None and data["kind"] == SINGLE_CYCLE:
        for cat_id, _ver, cat in view.iter_raw("category"):
            if cat["program_id"] == entity_id:
                errors.append(f"kind: program still has category {cat_id}; SINGLE_CYCLE programs have none")
                break


# --- referential integrity on delete ---------------------------------------

def _entity_references(kind: str, data: dict):
    """Yield (kind, id) pairs referenced by a stored entity."""
    if kind == "institution":
        yield ("person", data["head_id"])
        for p in data["member_ids"]:
            yield ("person", p)
    elif kind == "program":
        yield ("person", data["dean_id"])
        for l in data["lecture_ids"]:
            yield ("lecture", l)
    elif kind == "category":
        yield ("program", data["program_id"])
    elif kind == "module":
        yield ("institution", data["institution_id"])
        yield ("person", data["responsible_id"])
        for p in data["lecturer_ids"]:
            yield ("person", p)
        for l in data["lecture_ids"]:
            yield ("lecture", l)
        for t in data["topic_ids"]:
            yield ("topic", t)
    elif kind == "topic":
        for term_id, lecture_ids in data["assignments"].items():
            yield ("term", term_id)
            for l in lecture_ids:
                yield ("lecture", l)
    elif kind == "lecture":
        yield ("institution", data["institution_id"])
        yield ("term", data["term_id"])
        for p in data["lecturer_ids"]:
            yield ("person", p)
    elif kind == "grant":
        yield ("person", data["grantee_id"])
        yield ("person", data["granter_id"])
        yield (data["scope_kind"], data["scope_id"])
    elif kind == "inclusion":
        yield ("module", data["module_id"])
        yield ("program", data["program_id"])
        yield ("category", data["category_id"])


def find_referrers(view, kind: str, entity_id: str) -> list[str]:
    """All stored entities holding a live reference to (kind, entity_id).

    History/audit actor ids are intentionally not references: they are
    records of the past, not structural links.
    """
    referrers = []
    for other_kind in ALL_KINDS:
        for other_id, _ver, data in view.iter_raw(other_kind):
            if other_kind == kind and other_id == entity_id:
                continue
            for rk, rid in _entity_references(other_kind, data):
                if rk == kind and rid == entity_id:
                    referrers.append(f"{other_kind}:{other_id}")
                    break
    return referrers


def assert_not_referenced(view, kind: str, entity_id: str) -> None:
    referrers = find_referrers(view, kind, entity_id)
    if referrers:
        raise Referenced(
            f"{kind}:{entity_id} is referenced by {', '.join(sorted(referrers))}",
            details=sorted(referrers),
        )


# --- program structure validation ------------------------------------------

def validate_program(view, program_id: str) -> list[dict]:
    """Full-scan structural check of one program.

    Returns one violation per broken rule, each naming the offending entity.
    Empty list means every StudyProgram/Category invariant holds.  Data that
    the write path would reject can still occur through bulk import of legacy
    stores, hence the re-check.
    """
    entry = view.get_raw("program", program_id)
    if entry is None:
        raise NotFound(f"program:{program_id}")
    _ver, program = entry
    violations = []
    categories = [
        (cat_id, cat) for cat_id, _v, cat in view.iter_raw("category")
        if cat["program_id"] == program_id
    ]
    if program["kind"] == SINGLE_CYCLE:
        for cat_id, _cat in categories:
            violations.append({
                "entity": f"category:{cat_id}",
                "rule": "category-in-single-cycle-program",
                "detail": f"program {program_id} is SINGLE_CYCLE but holds category {cat_id}",
            })
    else:
        if program["lecture_ids"]:
            violations.append({
                "entity": f"program:{program_id}",
                "rule": "two-cycle-direct-lectures",
                "detail": f"TWO_CYCLE program {program_id} references lectures directly",
            })
    for inc_id, _v, record in view.iter_raw("inclusion"):
        if record["program_id"] != program_id:
            continue
        if program["kind"] == SINGLE_CYCLE:
            violations.append({
                "entity": f"inclusion:{inc_id}",
                "rule": "inclusion-in-single-cycle-program",
                "detail": f"inclusion {inc_id} targets SINGLE_CYCLE program {program_id}",
            })
            continue
        cat_entry = view.get("category", record["category_id"])
        if cat_entry is not None and cat_entry[1]["program_id"] != program_id:
            violations.append({
                "entity": f"inclusion:{inc_id}",
                "rule": "inclusion-category-mismatch",
                "detail": (
                    f"inclusion {inc_id} places a module under category "
                    f"{record['category_id']} which belongs to another program"
                ),
            })
    return violations


def resolve_module_lectures(view, module_id: str, term_id: str) -> list[str]:
    """Lectures a module contributes in a term: direct references plus the
    topic assignments recorded for that term.  Sorted, duplicate-free."""
    entry = view.get_raw("module", module_id)
    if entry is None:
        raise NotFound(f"module:{module_id}")
    if view.get_raw("term", term_id) is None:
        raise NotFound(f"term:{term_id}")
    _ver, module = entry
    lectures = set(module["lecture_ids"])
    for topic_id in module["topic_ids"]:
        topic_entry = view.get_raw("topic", topic_id)
        if topic_entry is None:
            continue
        lectures.update(topic_entry[1]["assignments"].get(term_id, []))
    return sorted(lectures)


def ordered_categories(view, program_id: str) -> list[tuple[str, dict]]:
    """Categories of a program in presentation order (position, then id)."""
    cats = [
        (cat_id, cat) for cat_id, _v, cat in view.iter_raw("category")
        if cat["program_id"] == program_id
    ]
    cats.sort(key=lambda item: (item[1]["position"], item[0]))
    return cats
