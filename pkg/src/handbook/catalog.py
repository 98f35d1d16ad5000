"""Generated information objects: CSV exports, program module catalogs,
per-institution semester catalogs, personal timetables and single-lecture
documents.

Every generator reads exactly one snapshot and is deterministic for it:
byte-identical output for identical snapshot and parameters.  The gate for
program catalogs is the inclusion workflow; pending or revoked modules never
appear.  Degenerate fields render as explicit placeholders so the document
structure stays stable.
"""

from __future__ import annotations

import html
import json

from .entities import SINGLE_CYCLE, is_calendar_day, resolve_module_lectures, WEEKDAYS
from .errors import NotFound, UnknownKind
from .inclusion import effective_modules

CSV_HEADERS = {
    "modules": ["id", "title", "institution_id", "responsible_id", "lecturer_ids", "lecture_ids"],
    "lectures": ["id", "title", "institution_id", "lecturer_ids", "term", "dates"],
    "persons": ["id", "display_name", "login_name"],
}

_QUOTE_TRIGGERS = (",", '"', "\n", "\r")


def csv_cell(value: str) -> str:
    if any(ch in value for ch in _QUOTE_TRIGGERS):
        return '"' + value.replace('"', '""') + '"'
    return value


def format_csv(rows) -> str:
    """Rows of string cells -> CSV text, LF line endings, trailing LF."""
    return "".join(",".join(csv_cell(cell) for cell in row) + "\n" for row in rows)


def format_date_entry(d: dict) -> str:
    return f"{d['day']} {d['start']}-{d['end']} @{d['room']}"


def export_csv(view, kind: str) -> bytes:
    if kind not in CSV_HEADERS:
        raise UnknownKind(f"csv export kind must be one of {sorted(CSV_HEADERS)}, got {kind!r}")
    rows = [CSV_HEADERS[kind]]
    if kind == "modules":
        for mod_id, _v, m in view.iter_raw("module"):
            rows.append([
                mod_id, m["title"], m["institution_id"], m["responsible_id"],
                ";".join(m["lecturer_ids"]), ";".join(m["lecture_ids"]),
            ])
    elif kind == "lectures":
        for lec_id, _v, l in view.iter_raw("lecture"):
            rows.append([
                lec_id, l["title"], l["institution_id"],
                ";".join(l["lecturer_ids"]), l["term_id"],
                ";".join(format_date_entry(d) for d in l["dates"]),
            ])
    else:
        for per_id, _v, p in view.iter_raw("person"):
            rows.append([per_id, p["display_name"], p["login_name"]])
    return format_csv(rows).encode("utf-8")


def canonical_json_bytes(document: dict) -> bytes:
    return (json.dumps(document, ensure_ascii=False, sort_keys=True, indent=2) + "\n").encode("utf-8")


# --- document builders ------------------------------------------------------

def _person_brief(view, person_id: str) -> dict:
    entry = view.get_raw("person", person_id)
    display = entry[1]["display_name"] if entry else "(unknown)"
    return {"id": person_id, "display_name": display}


def _lecture_node(view, lecture_id: str) -> dict:
    _ver, lecture = view.require("lecture", lecture_id)
    node = {
        "id": lecture_id,
        "title": lecture["title"],
        "institution_id": lecture["institution_id"],
        "term": lecture["term_id"],
        "lecturers": [_person_brief(view, p) for p in lecture["lecturer_ids"]],
        "dates": list(lecture["dates"]),
        "flags": [] if lecture["dates"] else ["NO_DATES"],
    }
    return node


def _sorted_lecture_nodes(view, lecture_ids) -> list[dict]:
    nodes = [_lecture_node(view, lid) for lid in lecture_ids]
    nodes.sort(key=lambda n: (n["title"], n["id"]))
    return nodes


def generate_program_catalog(view, program_id: str, term_id: str) -> dict:
    _pver, program = view.require("program", program_id)
    view.require("term", term_id)
    doc = {
        "document": "program-catalog",
        "generated_at": view.ts,
        "snapshot": view.token,
        "term": term_id,
        "program": {
            "id": program_id,
            "title": program["title"],
            "kind": program["kind"],
            "dean": _person_brief(view, program["dean_id"]),
        },
    }
    if program["kind"] == SINGLE_CYCLE:
        doc["lectures"] = _sorted_lecture_nodes(view, program["lecture_ids"])
        return doc
    categories = []
    for cat_id, module_ids in effective_modules(view, program_id):
        _cver, category = view.require("category", cat_id)
        module_nodes = []
        for mod_id in module_ids:
            _mver, module = view.require("module", mod_id)
            module_nodes.append({
                "id": mod_id,
                "title": module["title"],
                "description": module["description"] or "(no description)",
                "institution_id": module["institution_id"],
                "responsible": _person_brief(view, module["responsible_id"]),
                "lecturers": [_person_brief(view, p) for p in module["lecturer_ids"]],
                "attributes": dict(module["attributes"]),
                "lectures": _sorted_lecture_nodes(
                    view, resolve_module_lectures(view, mod_id, term_id)),
            })
        categories.append({"id": cat_id, "title": category["title"], "modules": module_nodes})
    doc["categories"] = categories
    return doc


def generate_institution_catalog(view, institution_id: str, term_id: str) -> dict:
    _iver, institution = view.require("institution", institution_id)
    view.require("term", term_id)
    lecture_ids = [
        lec_id for lec_id, _v, lecture in view.iter_raw("lecture")
        if lecture["institution_id"] == institution_id and lecture["term_id"] == term_id
    ]
    return {
        "document": "institution-catalog",
        "generated_at": view.ts,
        "snapshot": view.token,
        "term": term_id,
        "institution": {"id": institution_id, "name": institution["name"]},
        "lectures": _sorted_lecture_nodes(view, lecture_ids),
    }


def _timetable_sort_key(entry: dict):
    day = entry["day"]
    if is_calendar_day(day):
        return (1, day, entry["start"], entry["end"], entry["lecture"]["title"], entry["lecture"]["id"])
    return (0, WEEKDAYS.index(day), entry["start"], entry["end"],
            entry["lecture"]["title"], entry["lecture"]["id"])


def generate_person_timetable(view, person_id: str, term_id: str) -> dict:
    _pver, person = view.require("person", person_id)
    view.require("term", term_id)
    entries = []
    for lec_id, _v, lecture in view.iter_raw("lecture"):
        if lecture["term_id"] != term_id or person_id not in lecture["lecturer_ids"]:
            continue
        for d in lecture["dates"]:
            entries.append({
                "lecture": {"id": lec_id, "title": lecture["title"]},
                "day": d["day"], "start": d["start"], "end": d["end"], "room": d["room"],
            })
    entries.sort(key=_timetable_sort_key)
    return {
        "document": "personal-timetable",
        "generated_at": view.ts,
        "snapshot": view.token,
        "term": term_id,
        "person": {"id": person_id, "display_name": person["display_name"]},
        "entries": entries,
    }


def render_lecture_document(view, lecture_id: str) -> str:
    """Single-lecture description sheet, plain text, stable layout."""
    entry = view.get("lecture", lecture_id)
    if entry is None:
        raise NotFound(f"lecture:{lecture_id}")
    _ver, lecture = entry
    _iver, institution = view.require("institution", lecture["institution_id"])
    lecturers = [_person_brief(view, p)["display_name"] for p in lecture["lecturer_ids"]]
    lines = [
        f"Lecture: {lecture['title']}",
        f"Institution: {institution['name']}",
        f"Term: {lecture['term_id']}",
        f"Lecturers: {', '.join(lecturers) if lecturers else '(none)'}",
        "Dates:",
    ]
    if lecture["dates"]:
        lines.extend(f"  - {format_date_entry(d)}" for d in lecture["dates"])
    else:
        lines.append("  (not scheduled)")
    lines.append("")
    lines.append(lecture["description"] or "(no description)")
    lines.append("")
    return "\n".join(lines)


# --- HTML rendering ----------------------------------------------------------

def _esc(value: str) -> str:
    return html.escape(value, quote=True)


def _html_lecture(node: dict) -> list[str]:
    dates = "; ".join(format_date_entry(d) for d in node["dates"]) or "(not scheduled)"
    lecturers = ", ".join(_esc(p["display_name"]) for p in node["lecturers"]) or "(none)"
    return [
        f'<li class="lecture"><span class="title">{_esc(node["title"])}</span>'
        f' <span class="lecturers">{lecturers}</span>'
        f' <span class="dates">{_esc(dates)}</span></li>'
    ]


def render_html(document: dict) -> str:
    kind = document["document"]
    parts = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8">',
        f"<title>{_esc(kind)}</title></head><body>",
    ]
    if kind == "program-catalog":
        parts.append(f"<h1>{_esc(document['program']['title'])} &mdash; {_esc(document['term'])}</h1>")
        parts.append(f"<p>Dean: {_esc(document['program']['dean']['display_name'])}</p>")
        if document["program"]["kind"] == SINGLE_CYCLE:
            parts.append("<ul>")
            for node in document["lectures"]:
                parts.extend(_html_lecture(node))
            parts.append("</ul>")
        else:
            for category in document["categories"]:
                parts.append(f"<h2>{_esc(category['title'])}</h2>")
                for module in category["modules"]:
                    parts.append(f"<h3>{_esc(module['title'])}</h3>")
                    parts.append(f"<p>{_esc(module['description'])}</p>")
                    parts.append(
                        f"<p>Responsible: {_esc(module['responsible']['display_name'])}</p>")
                    if module["attributes"]:
                        parts.append("<dl>")
                        for key in sorted(module["attributes"]):
                            parts.append(f"<dt>{_esc(key)}</dt><dd>{_esc(module['attributes'][key])}</dd>")
                        parts.append("</dl>")
                    parts.append("<ul>")
                    for node in module["lectures"]:
                        parts.extend(_html_lecture(node))
                    parts.append("</ul>")
    elif kind == "institution-catalog":
        parts.append(f"<h1>{_esc(document['institution']['name'])} &mdash; {_esc(document['term'])}</h1>")
        parts.append("<ul>")
        for node in document["lectures"]:
            parts.extend(_html_lecture(node))
        parts.append("</ul>")
    elif kind == "personal-timetable":
        parts.append(f"<h1>{_esc(document['person']['display_name'])} &mdash; {_esc(document['term'])}</h1>")
        parts.append("<ol>")
        for entry in document["entries"]:
            span = f"{entry['day']} {entry['start']}-{entry['end']} @{entry['room']}"
            parts.append(f"<li>{_esc(span)}: {_esc(entry['lecture']['title'])}</li>")
        parts.append("</ol>")
    else:
        raise UnknownKind(f"cannot render document kind {kind!r}")
    parts.append(f'<p class="meta">snapshot {document["snapshot"]}, generated {_esc(document["generated_at"])}</p>')
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"
