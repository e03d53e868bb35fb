"""HTTP face of the session service.

Thin JSON layer over SessionStore: every route resolves a session, applies
or reads, and answers with canonical documents.  Action payloads reuse the
script-schema validation, so the CLI and the API reject exactly the same
inputs.  Error mapping: unknown session or entity ids inside a session ->
404 is reserved for the session itself; invalid actions -> 422 with the
module error code; stale revision -> 409.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .errors import GuiteNetError, ScriptParseError
from .session import (
    Session,
    SessionStore,
    StaleRevision,
    UnknownSession,
    action_from_dict,
    level_check,
    script_to_dict,
)

FRONTEND_DIR_ENV = "GUITENET_FRONTEND_DIR"


def _frontend_dir() -> Path | None:
    configured = os.environ.get(FRONTEND_DIR_ENV)
    candidates = [Path(configured)] if configured else [
        Path(__file__).resolve().parents[2] / "frontend",
    ]
    for candidate in candidates:
        if candidate and (candidate / "index.html").is_file():
            return candidate
    return None


def _session_document(session: Session) -> dict:
    return {
        "session_id": session.id,
        "revision": session.revision,
        "opt_level": session.opt_level,
        "target": session.target,
        "state": session.state_dict(),
    }


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="guitenet", docs_url=None, redoc_url=None)
    app.state.store = store

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(
            status_code=404,
            content={"error": {"code": exc.code, "message": str(exc)}})

    @app.exception_handler(StaleRevision)
    async def _stale(request: Request, exc: StaleRevision):
        return JSONResponse(
            status_code=409,
            content={"error": {"code": exc.code, "message": str(exc),
                               "expected": exc.expected, "got": exc.got}})

    @app.exception_handler(GuiteNetError)
    async def _invalid(request: Request, exc: GuiteNetError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": exc.code, "message": str(exc)}})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/sessions", status_code=201)
    def create_session(body: dict | None = None):
        body = body or {}
        opt_level = level_check(body.get("opt_level", 0))
        target = body.get("target", "numpy")
        session = store.create(opt_level=opt_level, target=target)
        document = _session_document(session)
        document["code"] = session.code()
        return document

    @app.get("/api/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = store.get(session_id)
        return _session_document(session)

    @app.post("/api/sessions/{session_id}/actions")
    def apply_action(session_id: str, body: dict):
        if "revision" not in body or not isinstance(body["revision"], int):
            raise ScriptParseError("body must carry the integer revision "
                                   "the client saw")
        action = action_from_dict(body.get("action"))
        store.get(session_id)  # 404 before the revision check
        session = store.apply(session_id, body["revision"], action)
        document = _session_document(session)
        document["code"] = session.code()
        return document

    @app.get("/api/sessions/{session_id}/code")
    def get_code(session_id: str, opt_level: int | None = None):
        session = store.get(session_id)
        level = session.opt_level if opt_level is None \
            else level_check(opt_level)
        return {
            "session_id": session.id,
            "revision": session.revision,
            "opt_level": level,
            "code": session.code(level),
        }

    @app.get("/api/sessions/{session_id}/dag")
    def get_dag(session_id: str, opt_level: int | None = None):
        session = store.get(session_id)
        document = session.dag_document(opt_level)
        document["session_id"] = session.id
        document["revision"] = session.revision
        return document

    @app.get("/api/sessions/{session_id}/script")
    def get_script(session_id: str):
        session = store.get(session_id)
        return {
            "session_id": session.id,
            "revision": session.revision,
            "script": script_to_dict(session.log),
        }

    @app.delete("/api/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        store.delete(session_id)
        return Response(status_code=204)

    frontend = _frontend_dir()
    if frontend is not None:
        app.mount("/", StaticFiles(directory=frontend, html=True),
                  name="frontend")
    return app


def serve(host: str, port: int) -> None:  # pragma: no cover - manual entry
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="info")
