"""Shared fixtures: an in-memory service with an admin session and helpers to
build worlds of institutions, people, programs and lectures through the real
service surface."""

from __future__ import annotations

import pytest

from handbook.service import LocalCredentials, Service
from handbook.store import Store

ADMIN_LOGIN = "admin"
ADMIN_PW = "admin-pw"


class World:
    """Wraps a Service with login bookkeeping so tests read naturally."""

    def __init__(self, service: Service):
        self.service = service
        self.tokens: dict[str, str] = {}
        self.admin = self.login(ADMIN_LOGIN, ADMIN_PW)

    def login(self, login_name: str, password: str | None = None) -> str:
        token = self.service.login(login_name, password or f"{login_name}-pw")["token"]
        self.tokens[login_name] = token
        return token

    def token(self, login_name: str) -> str:
        return self.tokens[login_name]

    # -- builders (all through the service, admin unless told otherwise) --

    def person(self, login: str, display: str | None = None, *, token=None) -> str:
        return self.service.create_entity(token or self.admin, "person", {
            "login_name": login,
            "display_name": display or login.title(),
            "credential": f"{login}-pw",
        })["id"]

    def institution(self, name: str, head: str, members: list[str], *, token=None) -> str:
        return self.service.create_entity(token or self.admin, "institution", {
            "name": name, "head_id": head,
            "member_ids": sorted(set(members) | {head}),
        })["id"]

    def term(self, term_id: str, freeze: str = "2099-01-01") -> str:
        return self.service.create_entity(self.admin, "term", {
            "id": term_id, "schedule_freeze_date": freeze,
        })["id"]

    def program(self, title: str, kind: str, dean: str, lectures=(), *, token=None) -> str:
        return self.service.create_entity(token or self.admin, "program", {
            "title": title, "kind": kind, "dean_id": dean,
            "lecture_ids": sorted(lectures),
        })["id"]

    def category(self, program: str, title: str, position: int = 0, *, token=None) -> str:
        return self.service.create_entity(token or self.admin, "category", {
            "title": title, "program_id": program, "position": position,
        })["id"]

    def module(self, title: str, institution: str, responsible: str, *,
               lecturers=(), lectures=(), topics=(), attributes=None,
               description: str = "", token=None) -> str:
        return self.service.create_entity(token or self.admin, "module", {
            "title": title, "description": description,
            "institution_id": institution, "responsible_id": responsible,
            "lecturer_ids": sorted(lecturers), "lecture_ids": sorted(lectures),
            "topic_ids": sorted(topics), "attributes": attributes or {},
        })["id"]

    def topic(self, title: str, assignments=None, *, token=None) -> str:
        return self.service.create_entity(token or self.admin, "topic", {
            "title": title, "assignments": assignments or {},
        })["id"]

    def lecture(self, title: str, institution: str, term: str, *,
                lecturers=(), dates=(), description: str = "", token=None) -> str:
        return self.service.create_entity(token or self.admin, "lecture", {
            "title": title, "description": description,
            "institution_id": institution, "lecturer_ids": sorted(lecturers),
            "term_id": term, "dates": list(dates),
        })["id"]

    def grant(self, grantee: str, role: str, scope: str, *, token=None) -> str:
        return self.service.grant_role(token or self.admin, grantee, role, scope)["id"]

    def snapshot(self):
        return self.service.store.snapshot()


def make_service(journal_path=None, *, session_ttl: float = 3600.0, clock=None) -> Service:
    clock_kwargs = {"clock": clock} if clock is not None else {}
    store = Store(journal_path, **clock_kwargs)
    service = Service(store, admin_logins=(ADMIN_LOGIN,),
                      identity=LocalCredentials(), session_ttl=session_ttl,
                      **clock_kwargs)
    service.bootstrap_admin(ADMIN_LOGIN, ADMIN_PW)
    return service


@pytest.fixture
def service() -> Service:
    return make_service()


@pytest.fixture
def world(service) -> World:
    return World(service)


def date_slot(day="Mon", start="10:00", end="12:00", room="R1") -> dict:
    return {"day": day, "start": start, "end": end, "room": room}


@pytest.fixture
def campus(world: World):
    """Two institutions, two programs, people in every role.

    Returns the world with an ``ids`` attribute mapping names to entity ids.
    """
    w = world
    ids = {}
    ids["head_a"] = w.person("head.a")
    ids["head_b"] = w.person("head.b")
    ids["editor_a"] = w.person("editor.a")
    ids["editor_b"] = w.person("editor.b")
    ids["dean_p"] = w.person("dean.p")
    ids["resp_p"] = w.person("resp.p")
    ids["lecturer_x"] = w.person("lecturer.x")
    ids["tt_person"] = w.person("tt.person")
    ids["outsider"] = w.person("outsider")

    ids["inst_a"] = w.institution("Institute A", ids["head_a"],
                                  [ids["editor_a"], ids["lecturer_x"], ids["tt_person"]])
    ids["inst_b"] = w.institution("Institute B", ids["head_b"], [ids["editor_b"]])
    ids["term"] = w.term("2008S", freeze="2099-01-01")

    w.login("head.a")
    w.login("head.b")
    w.login("dean.p")
    w.login("editor.a")
    w.login("editor.b")
    w.login("resp.p")
    w.login("lecturer.x")
    w.login("tt.person")
    w.login("outsider")

    ids["grant_editor_a"] = w.grant(ids["editor_a"], "INSTITUTION_EDITOR",
                                    ids["inst_a"], token=w.token("head.a"))
    ids["grant_editor_b"] = w.grant(ids["editor_b"], "INSTITUTION_EDITOR",
                                    ids["inst_b"], token=w.token("head.b"))

    ids["prog_two"] = w.program("Systems Engineering", "TWO_CYCLE", ids["dean_p"])
    ids["prog_single"] = w.program("Classic Diploma", "SINGLE_CYCLE", ids["dean_p"])
    ids["cat_core"] = w.category(ids["prog_two"], "Core", 0)
    ids["cat_elective"] = w.category(ids["prog_two"], "Electives", 1)
    ids["grant_resp_p"] = w.grant(ids["resp_p"], "PROGRAM_RESPONSIBLE",
                                  ids["prog_two"], token=w.token("dean.p"))

    ids["lec_1"] = w.lecture("Databases", ids["inst_a"], "2008S",
                             lecturers=[ids["lecturer_x"]],
                             dates=[date_slot("Mon", "10:00", "12:00", "R1")])
    ids["lec_2"] = w.lecture("Networks", ids["inst_a"], "2008S",
                             lecturers=[ids["lecturer_x"]],
                             dates=[date_slot("Tue", "10:00", "12:00", "R2")])
    ids["mod_1"] = w.module("Data Systems", ids["inst_a"], ids["lecturer_x"],
                            lecturers=[ids["lecturer_x"]], lectures=[ids["lec_1"]],
                            description="Storage and querying.")
    ids["mod_2"] = w.module("Communication", ids["inst_a"], ids["lecturer_x"],
                            lecturers=[ids["lecturer_x"]], lectures=[ids["lec_2"]])

    w.ids = ids
    return w
