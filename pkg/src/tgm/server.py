"""HTTP service over a single project file.

Strict wrapper around the engine: every endpoint reuses exactly the calls
the CLI makes, and every successful mutation is saved back to the project
file before the response goes out.  Concurrency is optimistic: mutations
carry If-Match with the revision they saw; a stale revision gets 412.
"""

from __future__ import annotations

import json
import threading
from decimal import Decimal

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import executor, formats, inference, mapping as mapping_module, quality, relational
from .errors import TgmError
from .matching import SynonymTable
from .project import Project, load_project, save_project

API = "/api/v1"

_STATUS_BY_CODE = {
    "DUPLICATE_NAME": 409,
    "CONFLICTING_ACCEPT": 409,
    "UNKNOWN_CORRESPONDENCE": 404,
    "UNKNOWN_TARGET": 404,
    "VERSION_MISMATCH": 409,
}


def _error_response(exc: TgmError, status: int | None = None) -> JSONResponse:
    status = status or _STATUS_BY_CODE.get(exc.code, 400)
    return JSONResponse(status_code=status, content={"error": exc.to_dict()})


class ProjectStore:
    """Single writer, lock-free snapshot reads."""

    def __init__(self, path: str) -> None:
        self.path = path
        self.lock = threading.Lock()
        self.project = load_project(path)

    def check_revision(self, request: Request) -> Response | None:
        header = request.headers.get("if-match")
        if header is None:
            return JSONResponse(status_code=428, content={"error": {
                "code": "PRECONDITION_REQUIRED",
                "message": "mutations require If-Match: <revision>",
                "details": {}}})
        if header.strip('"') != str(self.project.revision):
            return JSONResponse(status_code=412, content={"error": {
                "code": "STALE_REVISION",
                "message": f"expected revision {self.project.revision}",
                "details": {"revision": self.project.revision}}})
        return None

    def save(self) -> None:
        save_project(self.project, self.path)


def create_app(project_path: str, ui_dir: str | None = None,
               cors_origin: str | None = None, token: str | None = None) -> FastAPI:
    app = FastAPI(title="tgm", openapi_url=f"{API}/openapi.json", docs_url=None,
                  redoc_url=None)
    store = ProjectStore(project_path)
    app.state.store = store

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"],
                           expose_headers=["ETag"])

    @app.middleware("http")
    async def auth(request: Request, call_next):
        if token and request.url.path.startswith(API):
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(status_code=401, content={"error": {
                    "code": "UNAUTHORIZED", "message": "bearer token required",
                    "details": {}}})
        response = await call_next(request)
        if request.url.path.startswith(API):
            # Revisioned state must never be served from an HTTP cache: a
            # cached project body would hide other writers' changes and
            # break If-Match round trips.
            response.headers.setdefault("Cache-Control", "no-store")
        return response

    def snapshot_headers() -> dict:
        return {"ETag": f'"{store.project.revision}"'}

    # -- reads ---------------------------------------------------------------

    @app.get(f"{API}/project")
    def get_project() -> Response:
        return JSONResponse(store.project.to_json(), headers=snapshot_headers())

    @app.get(f"{API}/quality")
    def get_quality() -> Response:
        project = store.project
        if project.target is None:
            return _error_response(TgmError(
                "UNRESOLVED_REFERENCE", "project has no target schema"))
        report = quality.quality_report(
            project.sources, project.target, project.correspondences,
            project.mapping, max_path_length=project.config.max_path_length)
        return JSONResponse(report.to_json(), headers=snapshot_headers())

    # -- mutations -----------------------------------------------------------

    @app.post(f"{API}/sources")
    async def post_source(request: Request) -> Response:
        with store.lock:
            stale = store.check_revision(request)
            if stale is not None:
                return stale
            try:
                form = await request.form()
                kind = form.get("kind")
                name = form.get("name") or None
                as_target = str(form.get("target", "")).lower() in ("1", "true", "yes")
                upload = form.get("file")
                if kind not in ("relational", "json", "csv") or upload is None:
                    raise TgmError("PARSE_ERROR",
                                   "multipart fields required: kind, file")
                text = (await upload.read()).decode("utf-8")
                filename = getattr(upload, "filename", None) or "upload"
                schema_name = name or filename.rsplit("/", 1)[-1].split(".", 1)[0]
                warnings: tuple[str, ...] = ()
                if kind == "relational":
                    schema = relational.model_to_schema(
                        relational.parse_ddl(text), name=schema_name)
                elif kind == "json":
                    result = inference.import_hierarchical(
                        inference.load_json_document(text),
                        schema_name=schema_name)
                    schema, warnings = result.schema, result.warnings
                else:
                    header, rows = inference.parse_csv(text)
                    result = inference.import_csv(header, rows,
                                                  schema_name=schema_name)
                    schema, warnings = result.schema, result.warnings
                if as_target:
                    store.project.set_target(schema)
                else:
                    store.project.add_source(schema)
                store.save()
            except TgmError as exc:
                return _error_response(exc)
            return JSONResponse(
                {"schema": formats.schema_to_json(schema),
                 "warnings": list(warnings),
                 "revision": store.project.revision},
                status_code=201, headers=snapshot_headers())

    @app.post(f"{API}/match")
    def post_match(request: Request) -> Response:
        with store.lock:
            stale = store.check_revision(request)
            if stale is not None:
                return stale
            try:
                proposals = store.project.run_match()
                store.save()
            except TgmError as exc:
                return _error_response(exc)
            return JSONResponse([c.to_json() for c in proposals],
                                headers=snapshot_headers())

    @app.post(f"{API}/correspondences/{{corr_id}}/decision")
    async def post_decision(corr_id: str, request: Request) -> Response:
        with store.lock:
            stale = store.check_revision(request)
            if stale is not None:
                return stale
            try:
                body = await request.json()
                verdict = body.get("verdict")
                who = body.get("who")
                if verdict not in ("ACCEPT", "REJECT") or not isinstance(who, str):
                    raise TgmError("PARSE_ERROR",
                                   'body must be {"verdict": "ACCEPT"|"REJECT", '
                                   '"who": "..."}')
                result = store.project.decide(corr_id, verdict, who)
                store.save()
            except TgmError as exc:
                return _error_response(exc)
            return JSONResponse(
                {"correspondence": result.correspondence.to_json(),
                 "warnings": list(result.warnings),
                 "revision": store.project.revision},
                headers=snapshot_headers())

    @app.put(f"{API}/rules")
    async def put_rules(request: Request) -> Response:
        with store.lock:
            stale = store.check_revision(request)
            if stale is not None:
                return stale
            try:
                text = (await request.body()).decode("utf-8")
                rules = mapping_module.parse_mapping(text)
            except TgmError as exc:
                return _error_response(exc, status=422)
            # compile rule by rule so the client sees every failure at once
            try:
                ctx = store.project._compile_context()
            except TgmError as exc:
                return _error_response(exc)
            errors = []
            warnings = []
            for rule in rules.rules:
                try:
                    compiled = mapping_module.compile_rule(rule, ctx)
                    warnings.extend(f"{rule.id}: {w}" for w in compiled.warnings)
                except TgmError as exc:
                    errors.append({"rule": rule.id, "error": exc.to_dict()})
            if errors:
                return JSONResponse(status_code=422,
                                    content={"errors": errors})
            store.project.mapping = rules
            store.project.revision += 1
            store.save()
            return JSONResponse({"rules": len(rules.rules),
                                 "warnings": warnings,
                                 "revision": store.project.revision},
                                headers=snapshot_headers())

    # -- execution (read-only with respect to the project) ----------------------

    @app.post(f"{API}/execute")
    async def post_execute(request: Request) -> Response:
        project = store.project
        if project.target is None:
            return _error_response(TgmError(
                "UNRESOLVED_REFERENCE", "project has no target schema"))
        try:
            text = (await request.body()).decode("utf-8")
            try:
                body = json.loads(text, parse_float=Decimal)
            except json.JSONDecodeError as exc:
                raise TgmError("PARSE_ERROR", f"invalid JSON: {exc.msg}") from exc
            refs = body.get("sources") if isinstance(body, dict) else None
            if not isinstance(refs, list) or not refs:
                raise TgmError("PARSE_ERROR",
                               'body must be {"sources": [<instance JSON or path>]}')
            schemas = project.schemas_by_name()
            graphs = []
            for i, ref in enumerate(refs):
                if isinstance(ref, str):
                    graphs.append(formats.parse_instance_for(
                        _read_file(ref), schemas, filename=ref))
                elif isinstance(ref, dict):
                    graphs.append(_graph_from_doc(ref, schemas))
                else:
                    raise TgmError("PARSE_ERROR",
                                   f"sources[{i}] must be an object or a path")
            result = executor.execute({s.name: s for s in project.sources},
                                      project.target, project.mapping, graphs)
        except TgmError as exc:
            return _error_response(exc)
        return JSONResponse(_jsonable(result.to_json()), headers=snapshot_headers())

    # -- static UI ----------------------------------------------------------------

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise TgmError("PARSE_ERROR", f"cannot read {path}: {exc.strerror}") from exc


def _graph_from_doc(doc: dict, schemas: dict):
    ref = doc.get("schema")
    schema = schemas.get(ref) if isinstance(ref, str) else None
    if schema is None:
        raise TgmError("UNRESOLVED_REFERENCE",
                       f"instance payload references unknown schema {ref!r}")
    return formats.instance_from_json(doc, schema)


def _jsonable(doc):
    """JSONResponse rejects Decimal; instance payloads stringify them."""
    if isinstance(doc, Decimal):
        return str(doc)
    if isinstance(doc, dict):
        return {k: _jsonable(v) for k, v in doc.items()}
    if isinstance(doc, list):
        return [_jsonable(v) for v in doc]
    return doc
