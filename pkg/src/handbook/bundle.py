"""Fixture bundles: one JSON file holding the whole store content with
human-readable ids.  Import is all-or-nothing into an empty store; export is
canonical (sorted entities, sorted keys, LF) so that
export -> fresh import -> export is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

from .access import ROLE_SCOPE_KIND, ROLES
from .entities import normalize_entity
from .errors import StoreNotEmpty, ValidationFailed
from .inclusion import REVOKED, fold_history
from .store import Store

BUNDLE_FORMAT = "handbook-bundle/1"

# import order satisfies forward references within one section list
_SECTIONS = (
    ("persons", "person"),
    ("institutions", "institution"),
    ("terms", "term"),
    ("lectures", "lecture"),
    ("topics", "topic"),
    ("modules", "module"),
    ("programs", "program"),
    ("categories", "category"),
)


class _Staging:
    """Store-view shim over entities collected during import, so the regular
    normalizers can resolve references before anything is committed."""

    def __init__(self):
        self.entities: dict[tuple[str, str], dict] = {}

    def get(self, kind, entity_id):
        data = self.entities.get((kind, entity_id))
        return None if data is None else (1, data)

    get_raw = get

    def list(self, kind):
        return sorted(
            (entity_id, 1, data)
            for (k, entity_id), data in self.entities.items() if k == kind
        )

    iter_raw = list

    def exists(self, kind, entity_id):
        return (kind, entity_id) in self.entities


def _require_str(value, path):
    if not isinstance(value, str) or not value:
        raise ValidationFailed(f"{path}: expected a non-empty string id")
    return value


def load_bundle(path: str | Path) -> dict:
    try:
        raw = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ValidationFailed(f"cannot read bundle {path}: {exc}")
    try:
        bundle = json.loads(raw)
    except ValueError as exc:
        raise ValidationFailed(f"bundle {path} is not valid JSON: {exc}")
    if not isinstance(bundle, dict):
        raise ValidationFailed("bundle must be a JSON object")
    return bundle


def import_bundle(store: Store, bundle: dict, *, actor: str = "system:import") -> dict:
    """Validate and write a whole bundle in one transaction.

    Returns {"entities": n, "credentials": {login: secret}} — credential
    registration is the caller's job (identity lives outside the store).
    """
    if store.snapshot().count() != 0:
        raise StoreNotEmpty("import requires an empty store")
    if bundle.get("format", BUNDLE_FORMAT) != BUNDLE_FORMAT:
        raise ValidationFailed(f"unsupported bundle format {bundle.get('format')!r}")
    known = {name for name, _ in _SECTIONS} | {"format", "grants", "inclusions", "credentials"}
    unknown = set(bundle) - known
    if unknown:
        raise ValidationFailed(f"bundle: unknown sections {sorted(unknown)}")

    staging = _Staging()

    def stage(kind, entity_id, data, path):
        key = (kind, entity_id)
        if key in staging.entities:
            raise ValidationFailed(f"{path}: duplicate id {entity_id!r}")
        staging.entities[key] = data

    for section, kind in _SECTIONS:
        items = bundle.get(section, [])
        if not isinstance(items, list):
            raise ValidationFailed(f"{section}: expected a list")
        for index, item in enumerate(items):
            path = f"{section}[{index}]"
            if not isinstance(item, dict):
                raise ValidationFailed(f"{path}: expected an object")
            entity_id = _require_str(item.get("id"), f"{path}.id")
            fields = {k: v for k, v in item.items() if k != "id"}
            if kind == "term":
                fields["id"] = entity_id
            try:
                # two passes: shape first, references once everything is staged
                data = normalize_entity(kind, fields, None)
            except ValidationFailed as exc:
                raise ValidationFailed(f"{path} ({entity_id}): {exc.message}")
            stage(kind, entity_id, data, path)

    for section, kind in _SECTIONS:
        for item in bundle.get(section, []):
            entity_id = item["id"]
            fields = {k: v for k, v in item.items() if k != "id"}
            if kind == "term":
                fields["id"] = entity_id
            try:
                normalize_entity(kind, fields, staging, entity_id=entity_id)
            except ValidationFailed as exc:
                raise ValidationFailed(f"{section} ({entity_id}): {exc.message}")
            except Exception as exc:
                raise ValidationFailed(f"{section} ({entity_id}): {exc}")

    for index, item in enumerate(bundle.get("grants", [])):
        path = f"grants[{index}]"
        if not isinstance(item, dict):
            raise ValidationFailed(f"{path}: expected an object")
        grant_id = _require_str(item.get("id"), f"{path}.id")
        role = item.get("role")
        if role not in ROLES:
            raise ValidationFailed(f"{path} ({grant_id}): unknown role {role!r}")
        scope_kind = ROLE_SCOPE_KIND[role]
        grant = {
            "grantee_id": _require_str(item.get("grantee_id"), f"{path}.grantee_id"),
            "role": role,
            "scope_kind": scope_kind,
            "scope_id": _require_str(item.get("scope_id"), f"{path}.scope_id"),
            "granter_id": _require_str(item.get("granter_id"), f"{path}.granter_id"),
            "granted_at": item.get("granted_at", "1970-01-01T00:00:00+00:00"),
        }
        for ref_kind, ref_id in (("person", grant["grantee_id"]),
                                 ("person", grant["granter_id"]),
                                 (scope_kind, grant["scope_id"])):
            if not staging.exists(ref_kind, ref_id):
                raise ValidationFailed(f"{path} ({grant_id}): unknown {ref_kind} {ref_id!r}")
        stage("grant", grant_id, grant, path)

    timetable_scopes = set()
    for (kind, gid), grant in staging.entities.items():
        if kind == "grant" and grant["role"] == "TIMETABLE_PERSON":
            if grant["scope_id"] in timetable_scopes:
                raise ValidationFailed(
                    f"grants ({gid}): lecture {grant['scope_id']} has two timetable persons")
            timetable_scopes.add(grant["scope_id"])

    active_triples = set()
    for index, item in enumerate(bundle.get("inclusions", [])):
        path = f"inclusions[{index}]"
        if not isinstance(item, dict):
            raise ValidationFailed(f"{path}: expected an object")
        rec_id = _require_str(item.get("id"), f"{path}.id")
        record = {
            "module_id": _require_str(item.get("module_id"), f"{path}.module_id"),
            "program_id": _require_str(item.get("program_id"), f"{path}.program_id"),
            "category_id": _require_str(item.get("category_id"), f"{path}.category_id"),
            "history": item.get("history", []),
        }
        for ref_kind, ref_id in (("module", record["module_id"]),
                                 ("program", record["program_id"]),
                                 ("category", record["category_id"])):
            if not staging.exists(ref_kind, ref_id):
                raise ValidationFailed(f"{path} ({rec_id}): unknown {ref_kind} {ref_id!r}")
        if not isinstance(record["history"], list):
            raise ValidationFailed(f"{path} ({rec_id}): history must be a list")
        try:
            folded = fold_history(record["history"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ValidationFailed(f"{path} ({rec_id}): bad history: {exc}")
        for flag in ("lecturer_ack", "dean_ack", "state"):
            if flag in item and item[flag] != folded[flag]:
                raise ValidationFailed(
                    f"{path} ({rec_id}): {flag} does not match the history fold")
        record.update(folded)
        cat = staging.entities.get(("category", record["category_id"]))
        if cat is not None and cat["program_id"] != record["program_id"]:
            raise ValidationFailed(
                f"{path} ({rec_id}): category belongs to program {cat['program_id']}")
        if record["state"] != REVOKED:
            triple = (record["module_id"], record["program_id"], record["category_id"])
            if triple in active_triples:
                raise ValidationFailed(
                    f"{path} ({rec_id}): second active record for module/program/category")
            active_triples.add(triple)
        stage("inclusion", rec_id, record, path)

    credentials = bundle.get("credentials", {})
    if not isinstance(credentials, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in credentials.items()
    ):
        raise ValidationFailed("credentials: must map login names to secrets")

    with store.transaction(actor, "import_bundle") as txn:
        for (kind, entity_id), data in staging.entities.items():
            txn.put(kind, entity_id, data)
    return {"entities": len(staging.entities), "credentials": dict(credentials)}


def export_bundle(view) -> dict:
    """Canonical bundle of the whole store.  Credentials are secrets and are
    never exported."""
    bundle: dict = {"format": BUNDLE_FORMAT}
    for section, kind in _SECTIONS:
        items = []
        for entity_id, _version, data in view.list(kind):
            item = {"id": entity_id, **data}
            if kind == "term":
                item = {"id": entity_id, "schedule_freeze_date": data["schedule_freeze_date"]}
            items.append(item)
        bundle[section] = items
    bundle["grants"] = [
        {"id": gid, **{k: v for k, v in g.items() if k != "scope_kind"}}
        for gid, _v, g in view.list("grant")
    ]
    bundle["inclusions"] = [
        {"id": rid, **record} for rid, _v, record in view.list("inclusion")
    ]
    return bundle


def bundle_bytes(bundle: dict) -> bytes:
    return (json.dumps(bundle, ensure_ascii=False, sort_keys=True, indent=2) + "\n").encode("utf-8")
