"""HTTP service for interactive sessions.

Wraps the pipeline behind a small JSON API consumed by the bundled web
UI: create a session, add documents, query with live parameter
overrides, inspect, delete. Sessions idle past the configured timeout
are reaped; shutdown destroys everything still open.
"""
from __future__ import annotations

import asyncio
import logging
import shutil
import tempfile
import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.datastructures import UploadFile

from . import __version__
from .config import AppConfig, ConfigError, apply_overrides
from .generation import Option
from .generation import QueryBundle
from .index import (SessionDestroyed, SessionManager, SessionNotFound,
                    SessionSealed, IndexError_)
from .pipeline import Runtime, answer_question, ingest_paths
from .provenance import ProvenanceLog

logger = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.detail = detail or {}

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"code": self.code, "message": str(self), "detail": self.detail},
        )


class SessionEntry:
    """Service-side view of one live session."""

    def __init__(self, session, config: AppConfig, runtime: Runtime,
                 overrides: dict):
        self.session = session
        self.config = config
        self.runtime = runtime
        self.overrides = overrides
        self.doc_count = 0
        self.chunk_count = 0
        self.upload_dir: str | None = None

    def handle(self) -> dict:
        return {
            "session_id": self.session.id,
            "doc_count": self.doc_count,
            "chunk_count": self.chunk_count,
            "created_at": self.session.created_at,
            "state": self.session.state,
            "overrides": self.overrides,
        }


class ServiceState:
    def __init__(self, config: AppConfig):
        self.config = config
        self.provenance = ProvenanceLog(config.values["server"]["provenance_path"])
        self.manager = SessionManager(event_sink=self.provenance)
        self.entries: dict[str, SessionEntry] = {}
        self.lock = threading.Lock()

    def entry(self, session_id: str) -> SessionEntry:
        with self.lock:
            entry = self.entries.get(session_id)
        if entry is None:
            raise ApiError(404, "session_not_found",
                           f"no session {session_id!r}")
        return entry

    def cleanup_entry(self, entry: SessionEntry):
        if entry.upload_dir:
            shutil.rmtree(entry.upload_dir, ignore_errors=True)
            entry.upload_dir = None

    def reap_idle(self):
        timeout = self.config.values["server"]["idle_timeout_minutes"] * 60.0
        reaped = self.manager.reap_idle(timeout)
        if reaped:
            logger.info("reaped %d idle sessions", reaped)
        return reaped


def create_app(config: AppConfig) -> FastAPI:
    state = ServiceState(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        stop = asyncio.Event()

        async def reaper():
            while not stop.is_set():
                try:
                    await asyncio.wait_for(stop.wait(), timeout=60.0)
                except asyncio.TimeoutError:
                    state.reap_idle()

        task = asyncio.create_task(reaper())
        try:
            yield
        finally:
            stop.set()
            task.cancel()
            for entry in list(state.entries.values()):
                state.cleanup_entry(entry)
            state.manager.destroy_all()

    app = FastAPI(title="ragrank", version=__version__, lifespan=lifespan)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return exc.response()

    def _wrap(exc: Exception) -> ApiError:
        if isinstance(exc, SessionNotFound):
            return ApiError(404, "session_not_found", f"no session {exc.args[0]!r}")
        if isinstance(exc, SessionDestroyed):
            return ApiError(410, "session_destroyed", str(exc))
        if isinstance(exc, SessionSealed):
            return ApiError(409, "session_sealed", str(exc))
        if isinstance(exc, ConfigError):
            return ApiError(400, "invalid_config", str(exc))
        if isinstance(exc, (IndexError_, ValueError)):
            return ApiError(400, "bad_request", str(exc))
        logger.exception("internal error")
        return ApiError(500, "internal_error", str(exc))

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.get("/config")
    async def get_config():
        return state.config.to_dict()

    @app.post("/sessions")
    async def create_session(body: dict | None = None):
        body = body or {}
        overrides = body.get("overrides") or {}
        try:
            session_config = apply_overrides(state.config, overrides)
            runtime = Runtime.from_config(session_config)
            from .pipeline import session_dimension

            session = state.manager.create(session_dimension(runtime))
        except Exception as exc:
            raise _wrap(exc)
        entry = SessionEntry(session, session_config, runtime, overrides)
        with state.lock:
            state.entries[session.id] = entry
        return entry.handle()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return state.entry(session_id).handle()

    @app.delete("/sessions/{session_id}")
    async def delete_session(session_id: str):
        entry = state.entry(session_id)
        entry.session.destroy()
        state.cleanup_entry(entry)
        return {"status": "destroyed", "session_id": session_id}

    @app.post("/sessions/{session_id}/documents")
    async def add_documents(session_id: str, request: Request):
        entry = state.entry(session_id)
        content_type = request.headers.get("content-type", "")
        paths: list[str] = []
        try:
            if content_type.startswith("multipart/"):
                form = await request.form()
                if entry.upload_dir is None:
                    entry.upload_dir = tempfile.mkdtemp(prefix="ragrank-upload-")
                for value in form.getlist("files"):
                    if not isinstance(value, UploadFile):
                        continue
                    dest = Path(entry.upload_dir) / Path(value.filename).name
                    dest.write_bytes(await value.read())
                    paths.append(str(dest))
            else:
                body = await request.json()
                for doc in body.get("documents", []):
                    if "content" in doc:
                        if entry.upload_dir is None:
                            entry.upload_dir = tempfile.mkdtemp(prefix="ragrank-upload-")
                        dest = Path(entry.upload_dir) / Path(doc["filename"]).name
                        dest.write_text(doc["content"], encoding="utf-8")
                        paths.append(str(dest))
                    else:
                        paths.append(doc["path"])
            if not paths:
                raise ApiError(400, "no_documents", "request carried no documents")
            warnings: list[str] = []
            docs, chunks = await asyncio.to_thread(
                ingest_paths, entry.session, paths, entry.runtime, warnings)
        except ApiError:
            raise
        except Exception as exc:
            raise _wrap(exc)
        entry.doc_count += docs
        entry.chunk_count += chunks
        return {**entry.handle(), "warnings": warnings}

    @app.post("/sessions/{session_id}/query")
    async def query(session_id: str, body: dict):
        entry = state.entry(session_id)
        question = body.get("question", "")
        if not question:
            raise ApiError(400, "bad_request", "question is required")
        try:
            runtime = entry.runtime
            config = entry.config
            if body.get("overrides"):
                config = apply_overrides(config, body["overrides"])
                runtime = Runtime.from_config(config)
            options = None
            if body.get("options"):
                options = [Option(o["label"], o["text"]) for o in body["options"]]
            instruction = (config.values["llm"]["mcq_instruction"] if options
                           else config.values["llm"]["open_instruction"])
            mode = body.get("mode") or config.values["embedding"]["mode"]
            bundle = QueryBundle.create(question, options,
                                        instruction=instruction,
                                        embedding_mode=mode)
            record = await asyncio.to_thread(
                answer_question, entry.session, bundle, runtime)
        except ApiError:
            raise
        except Exception as exc:
            raise _wrap(exc)
        state.provenance.append({
            "event": "answer", "session_id": session_id,
            "prediction": record.prediction,
            "source_files": record.source_files,
            "snippets": [s["text"] for s in record.snippets],
        })
        return {
            "answer": record.prediction,
            "parsed_label": record.parsed_label,
            "sources": [
                {"filename": s["filename"], "page": s["page"], "seq": s["seq"],
                 "snippet": s["text"], "rank_score": score}
                for s, score in zip(record.snippets, record.rank_scores)
            ],
            "timings": record.timings_ms,
            "warnings": record.warnings,
            "status": record.status,
            "embedding_mode": record.embedding_mode,
        }

    ui_dir = config.values["server"]["ui_dir"]
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.is_dir() else None
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
