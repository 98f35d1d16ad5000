"""Timetable conflict detection over lecture dates.

A date entry is either a weekly slot (weekday, recurring through the term) or
a concrete calendar date.  Two entries can collide only if their day patterns
can fall on the same day: weekly/weekly on the same weekday, weekly/calendar
when the calendar date lands on that weekday, calendar/calendar on the same
date.  Time spans must intersect with positive duration; touching boundaries
(end == start) do not conflict.  Conflicts are reported between distinct
lectures only, once per unordered pair per context.
"""

from __future__ import annotations

from dataclasses import dataclass

from .entities import is_calendar_day, weekday_of
from .errors import NotFound
from .inclusion import reachable_lectures

ROOM_OVERLAP = "ROOM_OVERLAP"
PROGRAM_OVERLAP = "PROGRAM_OVERLAP"

# (lecture_id, day, start, end, room) — canonical identity of one date entry
DateKey = tuple[str, str, str, str, str]


@dataclass(frozen=True, order=True)
class Conflict:
    kind: str
    context: str
    first: DateKey
    second: DateKey

    def to_dict(self) -> dict:
        def entry(key: DateKey) -> dict:
            return {"lecture_id": key[0], "day": key[1], "start": key[2],
                    "end": key[3], "room": key[4]}
        return {
            "kind": self.kind,
            "context": self.context,
            "first": entry(self.first),
            "second": entry(self.second),
        }


def days_coincide(day_a: str, day_b: str) -> bool:
    cal_a, cal_b = is_calendar_day(day_a), is_calendar_day(day_b)
    if cal_a == cal_b:
        return day_a == day_b
    calendar, weekly = (day_a, day_b) if cal_a else (day_b, day_a)
    return weekday_of(calendar) == weekly


def times_overlap(start_a: str, end_a: str, start_b: str, end_b: str) -> bool:
    # zero-padded HH:MM compares correctly as text; strict < keeps the
    # positive-measure rule (end_a == start_b is not a conflict)
    return start_a < end_b and start_b < end_a


def dates_overlap(a: DateKey, b: DateKey) -> bool:
    return days_coincide(a[1], b[1]) and times_overlap(a[2], a[3], b[2], b[3])


def _make_conflict(kind: str, context: str, a: DateKey, b: DateKey) -> Conflict:
    first, second = sorted((a, b))
    return Conflict(kind=kind, context=context, first=first, second=second)


def term_date_keys(view, term_id: str) -> list[DateKey]:
    keys = []
    for lec_id, _v, lecture in view.iter_raw("lecture"):
        if lecture["term_id"] != term_id:
            continue
        for d in lecture["dates"]:
            keys.append((lec_id, d["day"], d["start"], d["end"], d["room"]))
    return keys


def detect_conflicts(view, term_id: str, *, program_id: str | None = None,
                     room: str | None = None) -> list[Conflict]:
    """All room and program overlaps among the term's lecture dates.

    Optional filters narrow the report: ``program_id`` keeps PROGRAM_OVERLAP
    conflicts with that context, ``room`` keeps ROOM_OVERLAP conflicts in
    that room; both given keeps the union.
    """
    if view.get_raw("term", term_id) is None:
        raise NotFound(f"term:{term_id}")
    if program_id is not None and view.get_raw("program", program_id) is None:
        raise NotFound(f"program:{program_id}")
    keys = term_date_keys(view, term_id)
    found: set[Conflict] = set()

    by_room: dict[str, list[DateKey]] = {}
    for key in keys:
        by_room.setdefault(key[4], []).append(key)
    for room_id, group in by_room.items():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = group[i], group[j]
                if a[0] == b[0]:
                    continue
                if dates_overlap(a, b):
                    found.add(_make_conflict(ROOM_OVERLAP, room_id, a, b))

    scope_lectures = {key[0] for key in keys}
    for prog_id, _v, _program in view.iter_raw("program"):
        members = reachable_lectures(view, prog_id, term_id) & scope_lectures
        if len(members) < 2:
            continue
        group = [key for key in keys if key[0] in members]
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = group[i], group[j]
                if a[0] == b[0]:
                    continue
                if dates_overlap(a, b):
                    found.add(_make_conflict(PROGRAM_OVERLAP, prog_id, a, b))

    conflicts = sorted(found)
    if program_id is not None or room is not None:
        conflicts = [
            c for c in conflicts
            if (program_id is not None and c.kind == PROGRAM_OVERLAP and c.context == program_id)
            or (room is not None and c.kind == ROOM_OVERLAP and c.context == room)
        ]
    return conflicts
