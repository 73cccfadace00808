"""Serve a trained artifact over the heightfield-generation wire protocol.

POST /generate: PNG texture body in, 16-bit grayscale PNG out, size
matching the input or an explicit ?size=WxH, X-Model-Version header.
GET /health: {"ok": true, "model_version": <artifact hash prefix>}.
Malformed bodies get a 4xx with a plain-text reason.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import PlainTextResponse, Response
from starlette.concurrency import run_in_threadpool

from tactiletex.errors import TactiletexError
from tactiletex.heightfield import decode_texture_png, encode_heightfield_png

from .model import infer
from .train import load_artifact

MAX_DIM = 4096
MAX_BODY_BYTES = 16 * 1024 * 1024


class _HttpError(Exception):
    def __init__(self, status: int, reason: str):
        super().__init__(reason)
        self.status = status
        self.reason = reason


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() and p for p in parts):
        raise _HttpError(400, f"size must look like 256x256, got {text!r}")
    width, height = int(parts[0]), int(parts[1])
    if width < 1 or height < 1:
        raise _HttpError(400, f"size dimensions must be >= 1, got {text!r}")
    if width > MAX_DIM or height > MAX_DIM:
        raise _HttpError(413, f"size {text} exceeds the {MAX_DIM} pixel limit")
    return width, height


def create_app(artifact_dir) -> FastAPI:
    model, meta = load_artifact(artifact_dir)
    version = meta["model_version"]
    image_size = int(meta["config"]["image_size"])
    # one shared model instance; serialize inference so interleaved
    # requests cannot observe each other
    inference_lock = threading.Lock()

    app = FastAPI(title="heightgen model server", docs_url=None, redoc_url=None)

    @app.exception_handler(_HttpError)
    async def http_error(_request, exc: _HttpError):
        return PlainTextResponse(exc.reason, status_code=exc.status)

    def _generate(body: bytes, content_type: str, size_text: Optional[str]) -> Response:
        if len(body) > MAX_BODY_BYTES:
            raise _HttpError(413, f"body exceeds the {MAX_BODY_BYTES} byte limit")
        if not content_type.startswith("image/png"):
            raise _HttpError(415, f"expected content-type image/png, got {content_type!r}")
        try:
            texture = decode_texture_png(body)
        except TactiletexError as exc:
            raise _HttpError(400, f"body is not a decodable PNG texture: {exc}") from exc
        out_size = (texture.width, texture.height)
        if size_text is not None:
            out_size = _parse_size(size_text)
        with inference_lock:
            field = infer(model, texture, out_size=out_size, image_size=image_size)
        return Response(
            encode_heightfield_png(field, depth=16),
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
