"""HTTP services: the interactive studio API and a reference model server.

The studio API holds uploaded meshes in named sessions and re-runs the
displacement from the original geometry on every stylize call, so the
magnification factor is absolute rather than cumulative. The model stub
speaks the generate/health wire protocol using plain luminance, which
keeps every client and contract test runnable with no trained model.
"""

from __future__ import annotations

import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from starlette.concurrency import run_in_threadpool

from .displace import DisplacementParams, apply_heightfield
from .errors import GeneratorError, ImageError, MeshError, TactiletexError
from .extract import raw_displacement_stats
from .generators import (
    BaselineLuminance,
    Generator,
    GroundtruthPassthrough,
    describe,
    generate,
)
from .heightfield import (
    Heightfield,
    TextureImage,
    decode_texture_png,
    encode_heightfield_png,
    luminance,
    resample,
)
from .mesh import (
    ACTIVE_GROUP,
    TriMesh,
    dumps_obj,
    loads_obj,
    normalize_unit_cube,
    planar_uvs,
    subdivide_to,
)

API_SCHEMA_VERSION = 1
MODEL_STUB_VERSION = "luminance-stub-1"
MAX_GENERATE_DIM = 4096
# displacement of a full-white pixel at magnification 1, in unit-cube units
DEFAULT_STUDIO_AMPLITUDE = 0.05


class _ApiError(Exception):
    def __init__(self, status: int, reason: str):
        super().__init__(reason)
        self.status = status
        self.reason = reason


def _parse_size_param(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() and p for p in parts):
        raise _ApiError(400, f"size must look like 256x256, got {text!r}")
    width, height = int(parts[0]), int(parts[1])
    if width < 1 or height < 1:
        raise _ApiError(400, f"size dimensions must be >= 1, got {text!r}")
    if width > MAX_GENERATE_DIM or height > MAX_GENERATE_DIM:
        raise _ApiError(413, f"size {text} exceeds the {MAX_GENERATE_DIM} pixel limit")
    return width, height


# ---------------------------------------------------------------------------
# Model stub


def create_model_stub_app(version: str = MODEL_STUB_VERSION) -> FastAPI:
    """Wire-protocol server whose 'model' is the luminance baseline."""
    app = FastAPI(title="heightfield model stub", docs_url=None, redoc_url=None)

    @app.exception_handler(_ApiError)
    async def api_error(_request, exc: _ApiError):
        return PlainTextResponse(exc.reason, status_code=exc.status)

    def _generate(body: bytes, content_type: str, size_text: Optional[str]) -> Response:
        if not content_type.startswith("image/png"):
            raise _ApiError(415, f"expected content-type image/png, got {content_type!r}")
        try:
            texture = decode_texture_png(body)
        except (ImageError, TactiletexError) as exc:
            raise _ApiError(400, f"body is not a decodable PNG texture: {exc}") from exc
        field_ = luminance(texture)
        if size_text is not None:
            width, height = _parse_size_param(size_text)
            field_ = resample(field_, width, height)
        return Response(
            encode_heightfield_png(field_, depth=16),
            media_type="image/png",
            headers={"X-Model-Version": version},
        )

    @app.post("/generate")
    async def generate_route(request: Request, size: Optional[str] = None):
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        return await run_in_threadpool(_generate, body, content_type, size)

    @app.get("/health")
    async def health_route():
        return {"ok": True, "model_version": version}

    return app


# ---------------------------------------------------------------------------
# Studio API


@dataclass
class Session:
    id: str
    original: TriMesh
    texture: Optional[TextureImage] = None
    heightfield: Optional[Heightfield] = None
    stylized: Optional[TriMesh] = None
    magnification: Optional[float] = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class _SessionStore:
    """Bounded LRU map of live sessions."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"session capacity must be >= 1, got {capacity}")
        self._capacity = capacity
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, Session] = OrderedDict()

    def put(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session
            while len(self._sessions) > self._capacity:
                self._sessions.popitem(last=False)

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise _ApiError(404, f"unknown session {session_id!r}")
            self._sessions.move_to_end(session_id)
            return session


def create_studio_app(
    generator: Optional[Generator] = None,
    session_capacity: int = 32,
    target_faces: int = 25000,
    amplitude: float = DEFAULT_STUDIO_AMPLITUDE,
    cors_origins: tuple = ("*",),
) -> FastAPI:
    """Session-based mesh stylization service for the browser studio.

    Uploaded meshes are normalized to the unit cube and subdivided before
    use, so amplitude is expressed in unit-cube units here.
    """
    generator = generator if generator is not None else BaselineLuminance()
    if isinstance(generator, GroundtruthPassthrough):
        raise GeneratorError("studio sessions have no stored groundtruth to pass through")

    store = _SessionStore(session_capacity)
    app = FastAPI(title="texture stylization studio", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(_ApiError)
    async def api_error(_request, exc: _ApiError):
        return JSONResponse(
            {"schema_version": API_SCHEMA_VERSION, "error": exc.reason}, status_code=exc.status
        )

    def _preprocess(text: str) -> TriMesh:
        try:
            mesh = loads_obj(text, name="upload.obj")
            mesh, _ = normalize_unit_cube(mesh)
            if mesh.face_count < target_faces:
                mesh = subdivide_to(mesh, target_faces)
        except MeshError as exc:
            raise _ApiError(400, str(exc)) from exc
        if mesh.uvs is None:
            mesh = planar_uvs(mesh)
        return mesh

    def _create_session(body: bytes) -> JSONResponse:
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise _ApiError(400, f"mesh body is not UTF-8 OBJ text: {exc}") from exc
        mesh = _preprocess(text)
        session = Session(id=uuid.uuid4().hex, original=mesh)
        store.put(session)
        return JSONResponse(
            {
                "schema_version": API_SCHEMA_VERSION,
                "session_id": session.id,
                "vertex_count": mesh.vertex_count,
                "face_count": mesh.face_count,
            },
            status_code=201,
        )

    def _set_texture(session_id: str, body: bytes) -> dict:
        session = store.get(session_id)
        try:
            texture = decode_texture_png(body)
        except (ImageError, TactiletexError) as exc:
            raise _ApiError(400, f"body is not a decodable PNG texture: {exc}") from exc
        try:
            heightfield = generate(generator, texture)
        except GeneratorError as exc:
            raise _ApiError(502, f"heightfield generation failed: {exc}") from exc
        with session.lock:
            session.texture = texture
            session.heightfield = heightfield
            session.stylized = None
            session.magnification = None
        return {
            "schema_version": API_SCHEMA_VERSION,
            "status": "generated",
            "heightfield": {"width": heightfield.width, "height": heightfield.height},
        }

    def _params_for(mesh: TriMesh, magnification: float) -> DisplacementParams:
        mask = None
        if mesh.face_groups is not None and ACTIVE_GROUP in mesh.face_groups:
            mask = mesh.group_vertices(ACTIVE_GROUP)
        return DisplacementParams(
            magnification=magnification, amplitude_mm=amplitude, active_mask=mask
        )

    def _stylize(session_id: str, payload) -> dict:
        if not isinstance(payload, dict) or "magnification" not in payload:
            raise _ApiError(400, "body must be a JSON object with a 'magnification' field")
        magnification = payload["magnification"]
        if not isinstance(magnification, (int, float)) or isinstance(magnification, bool):
            raise _ApiError(400, f"magnification must be a number, got {magnification!r}")
        session = store.get(session_id)
        with session.lock:
            if session.heightfield is None:
                raise _ApiError(409, "no texture uploaded yet; POST texture before stylize")
            try:
                params = _params_for(session.original, float(magnification))
                stylized = apply_heightfield(session.original, session.heightfield, params)
            except TactiletexError as exc:
                raise _ApiError(400, str(exc)) from exc
            session.stylized = stylized
            session.magnification = float(magnification)
            stats = raw_displacement_stats(session.original, stylized)
        return {
            "schema_version": API_SCHEMA_VERSION,
            "magnification": float(magnification),
            "rms": stats.rms,
            "vertex_count": stylized.vertex_count,
        }

    def _get_mesh(session_id: str, which: str) -> Response:
        if which not in ("original", "stylized"):
            raise _ApiError(400, f"which must be 'original' or 'stylized', got {which!r}")
        session = store.get(session_id)
        with session.lock:
            if which == "original":
                mesh = session.original
            else:
                if session.stylized is None:
                    raise _ApiError(409, "session has not been stylized yet")
                mesh = session.stylized
            text = dumps_obj(mesh)
        return Response(text, media_type="text/plain; charset=utf-8")

    def _get_heightfield(session_id: str) -> Response:
        session = store.get(session_id)
        with session.lock:
            if session.heightfield is None:
                raise _ApiError(409, "no texture uploaded yet")
            png = encode_heightfield_png(session.heightfield, depth=16)
        return Response(png, media_type="image/png")

    @app.post("/sessions")
    async def create_session_route(request: Request):
        body = await request.body()
        return await run_in_threadpool(_create_session, body)

    @app.post("/sessions/{session_id}/texture")
    async def texture_route(session_id: str, request: Request):
        body = await request.body()
        return await run_in_threadpool(_set_texture, session_id, body)

    @app.post("/sessions/{session_id}/stylize")
    async def stylize_route(session_id: str, request: Request):
        try:
            payload = await request.json()
        except Exception as exc:
            raise _ApiError(400, f"body is not valid JSON: {exc}") from exc
        return await run_in_threadpool(_stylize, session_id, payload)

    @app.get("/sessions/{session_id}/mesh")
    async def mesh_route(session_id: str, which: str = "original"):
        return await run_in_threadpool(_get_mesh, session_id, which)

    @app.get("/sessions/{session_id}/heightfield")
    async def heightfield_route(session_id: str):
        return await run_in_threadpool(_get_heightfield, session_id)

    @app.get("/health")
    async def health_route():
        return {
            "schema_version": API_SCHEMA_VERSION,
            "ok": True,
            "generator": describe(generator),
        }

    return app
