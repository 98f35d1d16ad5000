"""HTTP surface.  Thin shell: parse request, call the service, map errors.
All authorization and validation happens in the service layer; generated
documents (catalogs, timetables, exports, conflict reports) are
world-readable, entity reads and all mutations need a session.
"""

from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import catalog
from .errors import HandbookError, ValidationFailed
from .service import Service

KIND_PATHS = {
    "institutions": "institution",
    "persons": "person",
    "programs": "program",
    "categories": "category",
    "modules": "module",
    "topics": "topic",
    "lectures": "lecture",
    "terms": "term",
}

_STATUS = {
    "VALIDATION_FAILED": 422,
    "DANGLING_REFERENCE": 422,
    "KIND_MISMATCH": 422,
    "UNKNOWN_KIND": 400,
    "NOT_FOUND": 404,
    "STALE_VERSION": 409,
    "DUPLICATE": 409,
    "INVALID_STATE": 409,
    "REFERENCED": 409,
    "STORE_NOT_EMPTY": 409,
    "FORBIDDEN": 403,
    "FORBIDDEN_FROZEN": 403,
    "AUTH_FAILED": 401,
    "CONFIG_INVALID": 500,
    "STORE_LOCKED": 503,
}


def _token(request: Request) -> str | None:
    header = request.headers.get("authorization", "")
    if header.lower().startswith("bearer "):
        return header[7:].strip()
    return None


async def _body(request: Request) -> dict:
    try:
        payload = await request.json()
    except ValueError:
        raise ValidationFailed("request body must be JSON")
    if not isinstance(payload, dict):
        raise ValidationFailed("request body must be a JSON object")
    return payload


def _expected_version(payload: dict) -> int:
    value = payload.get("expected_version")
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationFailed("expected_version: required integer")
    return value


def create_app(service: Service, *, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="handbook", docs_url=None, redoc_url=None)

    @app.exception_handler(HandbookError)
    async def _handbook_error(_request: Request, exc: HandbookError):
        status = _STATUS.get(exc.code, 500)
        return JSONResponse(status_code=status, content={"error": exc.to_dict()})

    @app.get("/health")
    async def health():
        return {"status": "ok", "snapshot": service.store.token}

    # -- session --

    @app.post("/session", status_code=201)
    async def login(request: Request):
        payload = await _body(request)
        return service.login(str(payload.get("login_name", "")),
                             str(payload.get("credential", "")))

    @app.get("/session")
    async def session_info(request: Request):
        return service.session_info(_token(request))

    @app.delete("/session")
    async def logout(request: Request):
        service.logout(_token(request) or "")
        return {"logged_out": True}

    # -- entity CRUD --

    def _register_crud(path: str, kind: str) -> None:
        @app.post(f"/{path}", status_code=201, name=f"create_{kind}")
        async def create(request: Request):
            payload = await _body(request)
            return service.create_entity(_token(request), kind, payload)

        @app.get(f"/{path}", name=f"list_{kind}")
        async def list_all(request: Request):
            return service.list_entities(_token(request), kind)

        @app.get(f"/{path}/{{entity_id}}", name=f"get_{kind}")
        async def get_one(request: Request, entity_id: str):
            return service.get_entity(_token(request), kind, entity_id)

        @app.patch(f"/{path}/{{entity_id}}", name=f"update_{kind}")
        async def update(request: Request, entity_id: str):
            payload = await _body(request)
            patch = payload.get("patch")
            if not isinstance(patch, dict):
                raise ValidationFailed("patch: required object")
            return service.update_entity(
                _token(request), kind, entity_id, _expected_version(payload), patch)

        @app.delete(f"/{path}/{{entity_id}}", name=f"delete_{kind}")
        async def delete(request: Request, entity_id: str,
                         expected_version: int | None = None):
            return service.delete_entity(
                _token(request), kind, entity_id, expected_version)

    for path, kind in KIND_PATHS.items():
        _register_crud(path, kind)

    # -- grants --

    @app.post("/grants", status_code=201)
    async def grant_role(request: Request):
        payload = await _body(request)
        return service.grant_role(
            _token(request),
            str(payload.get("grantee_id", "")),
            str(payload.get("role", "")),
            str(payload.get("scope_id", "")),
        )

    @app.get("/grants")
    async def list_grants(request: Request):
        return service.list_grants(_token(request))

    @app.delete("/grants/{grant_id}")
    async def revoke_role(request: Request, grant_id: str):
        return service.revoke_role(_token(request), grant_id)

    # -- inclusion workflow --

    @app.post("/inclusions", status_code=201)
    async def propose_inclusion(request: Request):
        payload = await _body(request)
        return service.propose_inclusion(
            _token(request),
            str(payload.get("module_id", "")),
            str(payload.get("program_id", "")),
            str(payload.get("category_id", "")),
        )

    @app.get("/inclusions")
    async def list_inclusions(request: Request, state: str | None = None,
                              program: str | None = None, module: str | None = None,
                              awaiting: str | None = None):
        return service.list_inclusions(
            _token(request), state=state, program_id=program,
            module_id=module, awaiting=awaiting)

    @app.get("/inclusions/{record_id}")
    async def get_inclusion(request: Request, record_id: str):
        return service.get_inclusion(_token(request), record_id)

    @app.post("/inclusions/{record_id}/ack")
    async def acknowledge_inclusion(request: Request, record_id: str):
        return service.acknowledge_inclusion(_token(request), record_id)

    @app.post("/inclusions/{record_id}/revoke")
    async def revoke_inclusion(request: Request, record_id: str):
        return service.revoke_inclusion(_token(request), record_id)

    @app.get("/programs/{program_id}/effective-modules")
    async def effective_modules(program_id: str):
        return service.effective_modules(program_id)

    # -- scheduling --

    @app.put("/lectures/{lecture_id}/dates")
    async def set_lecture_dates(request: Request, lecture_id: str):
        payload = await _body(request)
        dates = payload.get("dates")
        if not isinstance(dates, list):
            raise ValidationFailed("dates: required list")
        return service.set_lecture_dates(
            _token(request), lecture_id, dates, _expected_version(payload))

    @app.get("/conflicts")
    async def conflicts(term: str, program: str | None = None, room: str | None = None):
        return service.detect_conflicts(term, program_id=program, room=room)

    # -- generated information objects (world-readable) --

    @app.get("/export/csv")
    async def export_csv(kind: str):
        data = service.export_csv(kind)
        return Response(content=data, media_type="text/csv; charset=utf-8")

    @app.get("/catalogs/program/{program_id}")
    async def program_catalog(program_id: str, term: str, format: str = "json"):
        document = service.program_catalog(program_id, term)
        if format == "html":
            return Response(content=catalog.render_html(document),
                            media_type="text/html; charset=utf-8")
        if format != "json":
            raise ValidationFailed(f"format must be json or html, got {format!r}")
        return Response(content=catalog.canonical_json_bytes(document),
                        media_type="application/json")

    @app.get("/catalogs/institution/{institution_id}")
    async def institution_catalog(institution_id: str, term: str, format: str = "json"):
        document = service.institution_catalog(institution_id, term)
        if format == "html":
            return Response(content=catalog.render_html(document),
                            media_type="text/html; charset=utf-8")
        return Response(content=catalog.canonical_json_bytes(document),
                        media_type="application/json")

    @app.get("/timetables/person/{person_id}")
    async def person_timetable(person_id: str, term: str, format: str = "json"):
        document = service.person_timetable(person_id, term)
        if format == "html":
            return Response(content=catalog.render_html(document),
                            media_type="text/html; charset=utf-8")
        return Response(content=catalog.canonical_json_bytes(document),
                        media_type="application/json")

    @app.get("/lectures/{lecture_id}/document")
    async def lecture_document(lecture_id: str):
        return Response(content=service.lecture_document(lecture_id),
                        media_type="text/plain; charset=utf-8")

    @app.get("/programs/{program_id}/validation")
    async def program_validation(program_id: str):
        return service.validate_program(program_id)

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
