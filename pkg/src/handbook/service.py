"""Service facade: sessions, identity, and every operation the HTTP API and
CLI expose, each mutation authorized by exactly one access decision and
committed as one store transaction with one audit entry.
"""

from __future__ import annotations

import copy
import hashlib
import hmac
import json
import os
import secrets
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import catalog, inclusion, scheduling
from .access import AccessDecision, AccessPolicy, ROLE_SCOPE_KIND, ROLE_TIMETABLE_PERSON, ROLES
from .entities import (
    DOMAIN_KINDS,
    assert_not_referenced,
    new_id,
    normalize_dates,
    normalize_entity,
    validate_program,
)
from .errors import (
    AuthFailed,
    Forbidden,
    ForbiddenFrozen,
    InvalidState,
    NotFound,
    UnknownKind,
    ValidationFailed,
)
from .store import Store


class LocalCredentials:
    """Default identity provider: salted digests in a small JSON file (or in
    memory when no path is given).  The provider interface is the seam for
    plugging an external identity system in: ``verify(login, credential)``."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path else None
        self._entries: dict[str, dict] = {}
        if self._path is not None and self._path.exists():
            self._entries = json.loads(self._path.read_text("utf-8"))

    def _digest(self, salt: str, credential: str) -> str:
        return hashlib.sha256((salt + credential).encode("utf-8")).hexdigest()

    def set_credential(self, login_name: str, credential: str) -> None:
        salt = secrets.token_hex(8)
        self._entries[login_name] = {"salt": salt, "digest": self._digest(salt, credential)}
        self._flush()

    def verify(self, login_name: str, credential: str) -> bool:
        entry = self._entries.get(login_name)
        if entry is None:
            return False
        return hmac.compare_digest(entry["digest"], self._digest(entry["salt"], credential))

    def _flush(self) -> None:
        if self._path is None:
            return
        tmp = self._path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._entries, sort_keys=True, indent=2) + "\n", "utf-8")
        os.replace(tmp, self._path)


@dataclass
class Session:
    token: str
    person_id: str
    expires_at: float


class Service:
    def __init__(self, store: Store, *, admin_logins=("admin",), identity=None,
                 session_ttl: float = 3600.0, clock=time.time):
        self.store = store
        self.policy = AccessPolicy(admin_logins)
        self.identity = identity if identity is not None else LocalCredentials()
        self.session_ttl = session_ttl
        self.clock = clock
        self.sessions: dict[str, Session] = {}
        # (operation, actor_id, AccessDecision) per authorized mutation;
        # the endpoint-coverage test reads this
        self.decision_log: list[tuple[str, str, AccessDecision]] = []

    # -- bootstrap / identity --

    def bootstrap_admin(self, login_name: str, credential: str,
                        display_name: str = "Administrator") -> str:
        """Ensure the configured admin exists as a person and can log in."""
        if login_name not in self.policy.admin_logins:
            raise ValidationFailed(f"{login_name!r} is not in the configured admin set")
        snap = self.store.snapshot()
        existing = self._person_by_login(snap, login_name)
        if existing is None:
            person_id = new_id("person")
            with self.store.transaction("system:bootstrap", "create_person") as txn:
                data = normalize_entity(
                    "person", {"display_name": display_name, "login_name": login_name}, txn)
                txn.put("person", person_id, data)
        else:
            person_id = existing
        self.identity.set_credential(login_name, credential)
        return person_id

    def _person_by_login(self, view, login_name: str) -> str | None:
        for person_id, _v, person in view.iter_raw("person"):
            if person["login_name"] == login_name:
                return person_id
        return None

    # -- sessions --

    def login(self, login_name: str, credential: str) -> dict:
        if not self.identity.verify(login_name, credential):
            raise AuthFailed("invalid login name or credential")
        snap = self.store.snapshot()
        person_id = self._person_by_login(snap, login_name)
        if person_id is None:
            raise AuthFailed("login has no person record")
        token = secrets.token_urlsafe(24)
        session = Session(token=token, person_id=person_id,
                          expires_at=self.clock() + self.session_ttl)
        self.sessions[token] = session
        return {"token": token, "person_id": person_id,
                "expires_at": session.expires_at}

    def logout(self, token: str) -> None:
        self.sessions.pop(token, None)

    def actor(self, token: str | None) -> str:
        if not token:
            raise AuthFailed("session required")
        session = self.sessions.get(token)
        if session is None or session.expires_at <= self.clock():
            self.sessions.pop(token, None)
            raise AuthFailed("session expired or unknown")
        return session.person_id

    def session_info(self, token: str) -> dict:
        person_id = self.actor(token)
        snap = self.store.snapshot()
        _v, person = snap.require("person", person_id)
        grants = [
            {"id": gid, **g} for gid, _gv, g in snap.iter_raw("grant")
            if g["grantee_id"] == person_id
        ]
        return {
            "snapshot": snap.token,
            "person_id": person_id,
            "display_name": person["display_name"],
            "login_name": person["login_name"],
            "is_admin": self.policy.is_admin(snap, person_id),
            "grants": grants,
        }

    # -- decision plumbing --

    def _authorize(self, operation: str, actor_id: str, decision: AccessDecision) -> None:
        self.decision_log.append((operation, actor_id, decision))
        if not decision.allowed:
            if decision.reason == "frozen-schedule":
                raise ForbiddenFrozen(decision.reason)
            raise Forbidden(decision.reason)

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).isoformat()

    def _today(self):
        return datetime.fromtimestamp(self.clock(), tz=timezone.utc).date()

    @staticmethod
    def _check_kind(kind: str) -> None:
        if kind not in DOMAIN_KINDS:
            raise UnknownKind(f"unknown entity kind {kind!r}")

    # -- generic entity CRUD --

    def create_entity(self, token: str | None, kind: str, fields: dict) -> dict:
        self._check_kind(kind)
        actor_id = self.actor(token)
        if not isinstance(fields, dict):
            raise ValidationFailed(f"{kind}: expected an object")
        credential = None
        if kind == "person" and "credential" in fields:
            fields = dict(fields)
            credential = fields.pop("credential")
            if not isinstance(credential, str):
                raise ValidationFailed("person: credential must be a string")
        with self.store.transaction(actor_id, f"create_{kind}") as txn:
            self._authorize(f"create_{kind}", actor_id,
                            self.policy.can_create(txn, actor_id, kind, fields))
            data = normalize_entity(kind, fields, txn)
            if kind == "term":
                entity_id = data["id"]
                if txn.exists("term", entity_id):
                    raise ValidationFailed(f"term {entity_id!r} already exists")
            else:
                entity_id = new_id(kind)
            version = txn.put(kind, entity_id, data)
        if credential is not None:
            self.identity.set_credential(data["login_name"], credential)
        return {"id": entity_id, "version": version}

    def update_entity(self, token: str | None, kind: str, entity_id: str,
                      expected_version: int, patch: dict) -> dict:
        self._check_kind(kind)
        actor_id = self.actor(token)
        if not isinstance(patch, dict):
            raise ValidationFailed("patch: expected an object")
        if "id" in patch:
            raise ValidationFailed("patch: id is immutable")
        if kind == "lecture" and "dates" in patch:
            raise ValidationFailed(
                "patch: lecture dates change only through the dates operation")
        with self.store.transaction(actor_id, f"update_{kind}") as txn:
            _version, current = txn.require(kind, entity_id)
            decision = self._update_decision(txn, actor_id, kind, entity_id, patch)
            self._authorize(f"update_{kind}", actor_id, decision)
            merged = {**current, **patch}
            if kind == "term":
                merged["id"] = entity_id
            data = normalize_entity(kind, merged, txn, entity_id=entity_id)
            new_version = txn.put(kind, entity_id, data, expected_version=expected_version)
        return {"id": entity_id, "version": new_version}

    def _update_decision(self, view, actor_id, kind, entity_id, patch) -> AccessDecision:
        decision = self.policy.can_edit(view, actor_id, kind, entity_id)
        if kind == "program" and decision.allowed and decision.reason != "admin":
            # dean and cycle kind are structural appointments, not "contents"
            if {"dean_id", "kind"} & set(patch):
                return AccessDecision(False, "admin-only")
        return decision

    def delete_entity(self, token: str | None, kind: str, entity_id: str,
                      expected_version: int | None = None) -> dict:
        self._check_kind(kind)
        actor_id = self.actor(token)
        with self.store.transaction(actor_id, f"delete_{kind}") as txn:
            txn.require(kind, entity_id)
            self._authorize(f"delete_{kind}", actor_id,
                            self.policy.can_edit(txn, actor_id, kind, entity_id))
            assert_not_referenced(txn, kind, entity_id)
            txn.delete(kind, entity_id, expected_version=expected_version)
        return {"id": entity_id, "deleted": True}

    def get_entity(self, token: str | None, kind: str, entity_id: str) -> dict:
        self._check_kind(kind)
        self.actor(token)
        snap = self.store.snapshot()
        version, data = snap.require(kind, entity_id)
        return {"snapshot": snap.token, "id": entity_id, "version": version, "data": data}

    def list_entities(self, token: str | None, kind: str) -> dict:
        self._check_kind(kind)
        self.actor(token)
        snap = self.store.snapshot()
        items = [
            {"id": entity_id, "version": version, "data": data}
            for entity_id, version, data in snap.list(kind)
        ]
        return {"snapshot": snap.token, "items": items}

    # -- role grants --

    def grant_role(self, token: str | None, grantee_id: str, role: str,
                   scope_id: str) -> dict:
        actor_id = self.actor(token)
        if role not in ROLES:
            raise ValidationFailed(f"role: unknown role {role!r}")
        with self.store.transaction(actor_id, "grant_role") as txn:
            if not txn.exists("person", grantee_id):
                raise NotFound(f"person:{grantee_id}")
            decision = self.policy.grant_authority(txn, actor_id, role, scope_id)
            self._authorize("grant_role", actor_id, decision)
            for gid, _v, g in txn.iter_raw("grant"):
                if (g["grantee_id"], g["role"], g["scope_id"]) == (grantee_id, role, scope_id):
                    return {"id": gid, **g}  # idempotent re-grant
            if role == ROLE_TIMETABLE_PERSON:
                existing = self.policy.timetable_grant(txn, scope_id)
                if existing is not None:
                    txn.delete("grant", existing[0])  # one per lecture; replace
            grant = {
                "grantee_id": grantee_id,
                "role": role,
                "scope_kind": ROLE_SCOPE_KIND[role],
                "scope_id": scope_id,
                "granter_id": actor_id,
                "granted_at": self._now_iso(),
            }
            grant_id = new_id("grant")
            txn.put("grant", grant_id, grant)
            txn.set_primary("grant", grant_id)
        return {"id": grant_id, **grant}

    def revoke_role(self, token: str | None, grant_id: str) -> dict:
        actor_id = self.actor(token)
        with self.store.transaction(actor_id, "revoke_role") as txn:
            entry = txn.get("grant", grant_id)
            if entry is None:
                raise NotFound(f"grant:{grant_id}")
            _v, grant = entry
            decision = self.policy.grant_authority(
                txn, actor_id, grant["role"], grant["scope_id"])
            self._authorize("revoke_role", actor_id, decision)
            txn.delete("grant", grant_id)
        return {"id": grant_id, "revoked": True}

    def list_grants(self, token: str | None) -> dict:
        self.actor(token)
        snap = self.store.snapshot()
        items = [{"id": gid, "version": v, **g} for gid, v, g in snap.list("grant")]
        return {"snapshot": snap.token, "items": items}

    # -- inclusion workflow --

    def propose_inclusion(self, token: str | None, module_id: str,
                          program_id: str, category_id: str) -> dict:
        actor_id = self.actor(token)
        with self.store.transaction(actor_id, "propose_inclusion") as txn:
            txn.require("module", module_id)
            txn.require("program", program_id)
            sides = self.policy.inclusion_sides(txn, actor_id, module_id, program_id)
            decision = AccessDecision(bool(sides), "+".join(sorted(sides)) or "not-inclusion-party")
            self._authorize("propose_inclusion", actor_id, decision)
            rec_id, record = inclusion.propose(
                txn, sides, actor_id, module_id, program_id, category_id, self._now_iso())
        return {"id": rec_id, **record}

    def acknowledge_inclusion(self, token: str | None, record_id: str) -> dict:
        actor_id = self.actor(token)
        with self.store.transaction(actor_id, "acknowledge_inclusion") as txn:
            _v, record = txn.require("inclusion", record_id)
            if record["state"] != inclusion.PENDING:
                # state errors outrank side errors: a raced or replayed call
                # gets INVALID_STATE regardless of who asks
                raise InvalidState(f"inclusion:{record_id} is {record['state']}")
            sides = self.policy.inclusion_sides(
                txn, actor_id, record["module_id"], record["program_id"])
            open_sides = set()
            if not record["lecturer_ack"]:
                open_sides.add(inclusion.MODULE_SIDE)
            if not record["dean_ack"]:
                open_sides.add(inclusion.PROGRAM_SIDE)
            actionable = sides & open_sides
            reason = "+".join(sorted(actionable)) if actionable else (
                "wrong-side" if sides else "not-inclusion-party")
            self._authorize("acknowledge_inclusion", actor_id,
                            AccessDecision(bool(actionable), reason))
            record = inclusion.acknowledge(txn, sides, actor_id, record_id, self._now_iso())
        return {"id": record_id, **record}

    def revoke_inclusion(self, token: str | None, record_id: str) -> dict:
        actor_id = self.actor(token)
        with self.store.transaction(actor_id, "revoke_inclusion") as txn:
            _v, record = txn.require("inclusion", record_id)
            if record["state"] == inclusion.REVOKED:
                raise InvalidState(f"inclusion:{record_id} is already revoked")
            sides = self.policy.inclusion_sides(
                txn, actor_id, record["module_id"], record["program_id"])
            self._authorize("revoke_inclusion", actor_id,
                            AccessDecision(bool(sides), "+".join(sorted(sides)) or "not-inclusion-party"))
            record = inclusion.revoke(txn, sides, actor_id, record_id, self._now_iso())
        return {"id": record_id, **record}

    def get_inclusion(self, token: str | None, record_id: str) -> dict:
        self.actor(token)
        snap = self.store.snapshot()
        version, record = snap.require("inclusion", record_id)
        return {"snapshot": snap.token, "id": record_id, "version": version, **record}

    def list_inclusions(self, token: str | None, *, state: str | None = None,
                        program_id: str | None = None, module_id: str | None = None,
                        awaiting: str | None = None) -> dict:
        self.actor(token)
        snap = self.store.snapshot()
        if awaiting is not None:
            # pending_for_person hands back raw store objects; copy on egress
            records = [(rid, v, copy.deepcopy(rec)) for rid, v, rec in
                       inclusion.pending_for_person(snap, self.policy, awaiting)]
        else:
            records = snap.list("inclusion")
        items = []
        for rec_id, version, record in records:
            if state is not None and record["state"] != state:
                continue
            if program_id is not None and record["program_id"] != program_id:
                continue
            if module_id is not None and record["module_id"] != module_id:
                continue
            items.append({"id": rec_id, "version": version, **record})
        return {"snapshot": snap.token, "items": items}

    # -- scheduling --

    def set_lecture_dates(self, token: str | None, lecture_id: str, dates: list,
                          expected_version: int, now=None) -> dict:
        actor_id = self.actor(token)
        today = now if now is not None else self._today()
        with self.store.transaction(actor_id, "set_lecture_dates") as txn:
            _version, lecture = txn.require("lecture", lecture_id)
            decision = self.policy.can_modify_schedule(txn, actor_id, lecture_id, today)
            self._authorize("set_lecture_dates", actor_id, decision)
            errors: list[str] = []
            normalized = normalize_dates(dates, errors)
            if errors:
                raise ValidationFailed("dates: " + "; ".join(errors), details=errors)
            lecture["dates"] = normalized
            version = txn.put("lecture", lecture_id, lecture,
                              expected_version=expected_version)
        return {"id": lecture_id, "version": version}

    def detect_conflicts(self, term_id: str, *, program_id: str | None = None,
                         room: str | None = None) -> dict:
        snap = self.store.snapshot()
        conflicts = scheduling.detect_conflicts(
            snap, term_id, program_id=program_id, room=room)
        return {"snapshot": snap.token, "conflicts": [c.to_dict() for c in conflicts]}

    # -- published reads (world-readable generated objects) --

    def effective_modules(self, program_id: str) -> dict:
        snap = self.store.snapshot()
        categories = []
        for cat_id, module_ids in inclusion.effective_modules(snap, program_id):
            _cver, category = snap.require("category", cat_id)
            modules = []
            for mid in module_ids:
                _mver, module = snap.require("module", mid)
                modules.append({"id": mid, "title": module["title"]})
            categories.append({"id": cat_id, "title": category["title"], "modules": modules})
        return {"snapshot": snap.token, "program_id": program_id, "categories": categories}

    def program_catalog(self, program_id: str, term_id: str) -> dict:
        return catalog.generate_program_catalog(self.store.snapshot(), program_id, term_id)

    def institution_catalog(self, institution_id: str, term_id: str) -> dict:
        return catalog.generate_institution_catalog(self.store.snapshot(), institution_id, term_id)

    def person_timetable(self, person_id: str, term_id: str) -> dict:
        return catalog.generate_person_timetable(self.store.snapshot(), person_id, term_id)

    def lecture_document(self, lecture_id: str) -> str:
        return catalog.render_lecture_document(self.store.snapshot(), lecture_id)

    def export_csv(self, kind: str) -> bytes:
        return catalog.export_csv(self.store.snapshot(), kind)

    def validate_program(self, program_id: str) -> dict:
        snap = self.store.snapshot()
        return {"snapshot": snap.token,
                "violations": validate_program(snap, program_id)}

    def audit_entries(self) -> list:
        return [entry.to_dict() for entry in self.store.audit_entries()]
