"""Access decisions from institution associations and formally granted roles.

Three delegated roles exist; every grant names its issuer.  Issuer rules:
INSTITUTION_EDITOR grants come from the head of the scope institution,
PROGRAM_RESPONSIBLE grants from the dean of the scope program, and
TIMETABLE_PERSON grants from a responsible of a program containing the
lecture.  A deployment-configured admin set roots the chains.  Decisions are
pure functions of (view, actor, target, clock input) and always name the rule
they applied; anything matching no allow rule is denied.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from . import inclusion
from .errors import NotFound, ValidationFailed

ROLE_INSTITUTION_EDITOR = "INSTITUTION_EDITOR"
ROLE_TIMETABLE_PERSON = "TIMETABLE_PERSON"
ROLE_PROGRAM_RESPONSIBLE = "PROGRAM_RESPONSIBLE"

ROLES = (ROLE_INSTITUTION_EDITOR, ROLE_TIMETABLE_PERSON, ROLE_PROGRAM_RESPONSIBLE)

ROLE_SCOPE_KIND = {
    ROLE_INSTITUTION_EDITOR: "institution",
    ROLE_TIMETABLE_PERSON: "lecture",
    ROLE_PROGRAM_RESPONSIBLE: "program",
}


@dataclass(frozen=True)
class AccessDecision:
    allowed: bool
    reason: str

    def to_dict(self) -> dict:
        return {"allowed": self.allowed, "reason": self.reason}


def _allow(reason: str) -> AccessDecision:
    return AccessDecision(True, reason)


def _deny(reason: str) -> AccessDecision:
    return AccessDecision(False, reason)


class AccessPolicy:
    def __init__(self, admin_logins):
        self.admin_logins = frozenset(admin_logins)

    # -- role lookups --

    def is_admin(self, view, person_id: str) -> bool:
        entry = view.get_raw("person", person_id)
        return entry is not None and entry[1]["login_name"] in self.admin_logins

    def grants_of(self, view, person_id: str, role: str) -> set[str]:
        return {
            g["scope_id"]
            for _gid, _v, g in view.iter_raw("grant")
            if g["grantee_id"] == person_id and g["role"] == role
        }

    def editor_institutions(self, view, person_id: str) -> set[str]:
        return self.grants_of(view, person_id, ROLE_INSTITUTION_EDITOR)

    def responsible_programs(self, view, person_id: str) -> set[str]:
        return self.grants_of(view, person_id, ROLE_PROGRAM_RESPONSIBLE)

    def timetable_grant(self, view, lecture_id: str):
        """The single timetable grant for a lecture, if any."""
        for gid, _v, g in view.iter_raw("grant"):
            if g["role"] == ROLE_TIMETABLE_PERSON and g["scope_id"] == lecture_id:
                return gid, g
        return None

    def is_timetable_person(self, view, person_id: str, lecture_id: str) -> bool:
        found = self.timetable_grant(view, lecture_id)
        return found is not None and found[1]["grantee_id"] == person_id

    # -- edit decisions --

    def can_edit(self, view, actor_id: str, kind: str, entity_id: str) -> AccessDecision:
        if view.get_raw("person", actor_id) is None:
            raise NotFound(f"person:{actor_id}")
        entry = view.get_raw(kind, entity_id)
        if entry is None:
            raise NotFound(f"{kind}:{entity_id}")
        _ver, data = entry
        if self.is_admin(view, actor_id):
            return _allow("admin")

        if kind in ("module", "lecture"):
            if data["institution_id"] in self.editor_institutions(view, actor_id):
                return _allow("institution-editor")
            return _deny("wrong-institution")

        if kind == "person":
            memberships = {
                inst_id for inst_id, _v, inst in view.iter_raw("institution")
                if entity_id in inst["member_ids"]
            }
            if not memberships:
                return _deny("admin-only")
            if memberships & self.editor_institutions(view, actor_id):
                return _allow("institution-editor")
            return _deny("wrong-institution")

        if kind == "program":
            if entity_id in self.responsible_programs(view, actor_id):
                return _allow("program-responsible")
            return _deny("not-program-responsible")

        if kind == "category":
            if data["program_id"] in self.responsible_programs(view, actor_id):
                return _allow("program-responsible")
            return _deny("not-program-responsible")

        if kind == "topic":
            owning = {
                m["institution_id"] for _mid, _v, m in view.iter_raw("module")
                if entity_id in m["topic_ids"]
            }
            if not owning:
                return _deny("admin-only")
            if owning & self.editor_institutions(view, actor_id):
                return _allow("institution-editor")
            return _deny("wrong-institution")

        # institutions, terms and anything unlisted: no delegated rule
        return _deny("admin-only")

    def can_create(self, view, actor_id: str, kind: str, data: dict) -> AccessDecision:
        if view.get_raw("person", actor_id) is None:
            raise NotFound(f"person:{actor_id}")
        if self.is_admin(view, actor_id):
            return _allow("admin")

        if kind in ("module", "lecture"):
            institution_id = data.get("institution_id")
            if isinstance(institution_id, str) and \
                    institution_id in self.editor_institutions(view, actor_id):
                return _allow("institution-editor")
            return _deny("wrong-institution")

        if kind == "category":
            program_id = data.get("program_id")
            if isinstance(program_id, str) and \
                    program_id in self.responsible_programs(view, actor_id):
                return _allow("program-responsible")
            return _deny("not-program-responsible")

        if kind == "topic":
            if self.editor_institutions(view, actor_id):
                return _allow("institution-editor")
            return _deny("no-editor-grant")

        # person, institution, program, term: deployment/structural entities
        return _deny("admin-only")

    def can_modify_schedule(self, view, actor_id: str, lecture_id: str,
                            today: date) -> AccessDecision:
        if view.get_raw("person", actor_id) is None:
            raise NotFound(f"person:{actor_id}")
        entry = view.get_raw("lecture", lecture_id)
        if entry is None:
            raise NotFound(f"lecture:{lecture_id}")
        _ver, lecture = entry
        term_entry = view.get_raw("term", lecture["term_id"])
        if term_entry is None:
            raise NotFound(f"term:{lecture['term_id']}")
        _tver, term = term_entry
        freeze = date.fromisoformat(term["schedule_freeze_date"])

        if self.is_admin(view, actor_id):
            return _allow("admin")
        if self.is_timetable_person(view, actor_id, lecture_id):
            return _allow("timetable-person")
        if today >= freeze:
            return _deny("frozen-schedule")
        if lecture["institution_id"] in self.editor_institutions(view, actor_id):
            return _allow("institution-editor")
        return _deny("wrong-institution")

    # -- grant issuing authority --

    def grant_authority(self, view, granter_id: str, role: str,
                        scope_id: str) -> AccessDecision:
        if role not in ROLES:
            raise ValidationFailed(f"role: unknown role {role!r}")
        if view.get_raw("person", granter_id) is None:
            raise NotFound(f"person:{granter_id}")
        scope_kind = ROLE_SCOPE_KIND[role]
        entry = view.get_raw(scope_kind, scope_id)
        if entry is None:
            raise NotFound(f"{scope_kind}:{scope_id}")
        _ver, scope = entry
        if self.is_admin(view, granter_id):
            return _allow("admin")

        if role == ROLE_INSTITUTION_EDITOR:
            if scope["head_id"] == granter_id:
                return _allow("institution-head")
            return _deny("not-institution-head")

        if role == ROLE_PROGRAM_RESPONSIBLE:
            if scope["dean_id"] == granter_id:
                return _allow("program-dean")
            return _deny("not-program-dean")

        # TIMETABLE_PERSON: responsible of a program the lecture is part of
        affected = inclusion.programs_containing_lecture(view, scope_id)
        if affected & self.responsible_programs(view, granter_id):
            return _allow("program-responsible")
        return _deny("not-affected-program-responsible")

    # -- inclusion-protocol sides --

    def inclusion_sides(self, view, actor_id: str, module_id: str,
                        program_id: str) -> set[str]:
        """Which sides of a module-into-program inclusion the actor can act
        for: subset of {"module", "program"}.  Admin is both."""
        sides = set()
        if self.is_admin(view, actor_id):
            return {"module", "program"}
        mod_entry = view.get_raw("module", module_id)
        if mod_entry is not None:
            _v, module = mod_entry
            if actor_id == module["responsible_id"] \
                    or actor_id in module["lecturer_ids"] \
                    or module["institution_id"] in self.editor_institutions(view, actor_id):
                sides.add("module")
        prog_entry = view.get_raw("program", program_id)
        if prog_entry is not None:
            _v, program = prog_entry
            if actor_id == program["dean_id"] \
                    or program_id in self.responsible_programs(view, actor_id):
                sides.add("program")
        return sides
