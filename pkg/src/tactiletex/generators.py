"""Heightfield generators: the things the evaluation pipeline compares.

Three kinds exist. The luminance baseline converts the texture's
brightness straight into height. The passthrough returns the stored
groundtruth heightfield untouched (the reference condition). The remote
generator calls an HTTP model server speaking the PNG-in/PNG-out
protocol and is how externally trained models plug in.
"""

from __future__ import annotations

from dataclasses import dataclass

import requests

from .errors import GeneratorError
from .heightfield import (
    Heightfield,
    TextureImage,
    decode_heightfield_png,
    encode_texture_png,
    luminance,
    resample,
)

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class BaselineLuminance:
    kind = "baseline_luminance"


@dataclass(frozen=True)
class GroundtruthPassthrough:
    kind = "groundtruth_passthrough"


@dataclass(frozen=True)
class RemoteGenerator:
    endpoint: str
    timeout: float = DEFAULT_TIMEOUT
    kind = "remote"

    def __post_init__(self):
        if not self.endpoint.startswith(("http://", "https://")):
            raise GeneratorError(f"endpoint must be an http(s) URL, got {self.endpoint!r}")
        if self.timeout <= 0.0:
            raise GeneratorError(f"timeout must be positive, got {self.timeout}")
        object.__setattr__(self, "endpoint", self.endpoint.rstrip("/"))


Generator = BaselineLuminance | GroundtruthPassthrough | RemoteGenerator


def describe(generator: Generator) -> str:
    if isinstance(generator, RemoteGenerator):
        return f"remote={generator.endpoint}"
    return generator.kind


def parse_generator_spec(spec: str, timeout: float = DEFAULT_TIMEOUT) -> Generator:
    """Parse 'baseline', 'groundtruth' or 'remote=URL' (long names accepted)."""
    spec = spec.strip()
    if spec in ("baseline", "baseline_luminance"):
        return BaselineLuminance()
    if spec in ("groundtruth", "groundtruth_passthrough"):
        return GroundtruthPassthrough()
    if spec.startswith("remote="):
        return RemoteGenerator(endpoint=spec[len("remote=") :], timeout=timeout)
    raise GeneratorError(
        f"unknown generator spec {spec!r}; expected 'baseline', 'groundtruth' or 'remote=URL'"
    )


def _remote_generate(
    generator: RemoteGenerator, texture: TextureImage, size: tuple[int, int] | None
) -> Heightfield:
    url = generator.endpoint + "/generate"
    params = {}
    if size is not None:
        params["size"] = f"{size[0]}x{size[1]}"
    try:
        response = requests.post(
            url,
            data=encode_texture_png(texture),
            headers={"Content-Type": "image/png"},
            params=params,
            timeout=generator.timeout,
        )
    except requests.RequestException as exc:
        raise GeneratorError(f"request failed: {exc}", source=describe(generator)) from exc
    if response.status_code != 200:
        reason = response.text.strip() or f"HTTP {response.status_code}"
        raise GeneratorError(
            f"server rejected request ({response.status_code}): {reason}",
            source=describe(generator),
        )
    try:
        field = decode_heightfield_png(response.content)
    except Exception as exc:
        raise GeneratorError(f"undecodable response: {exc}", source=describe(generator)) from exc
    if size is not None and (field.width, field.height) != tuple(size):
        raise GeneratorError(
            f"requested {size[0]}x{size[1]}, got {field.width}x{field.height}",
            source=describe(generator),
        )
    return field


def generate(
    generator: Generator,
    texture: TextureImage,
    groundtruth: Heightfield | None = None,
    size: tuple[int, int] | None = None,
) -> Heightfield:
    """Produce a heightfield for a texture, optionally at a fixed size."""
    if size is not None and (size[0] < 1 or size[1] < 1):
        raise GeneratorError(f"invalid size {size}")
    if isinstance(generator, BaselineLuminance):
        field = luminance(texture)
    elif isinstance(generator, GroundtruthPassthrough):
        if groundtruth is None:
            raise GeneratorError("passthrough generator needs a groundtruth heightfield")
        field = groundtruth
    elif isinstance(generator, RemoteGenerator):
        return _remote_generate(generator, texture, size)
    else:
        raise GeneratorError(f"unknown generator {generator!r}")
    if size is not None and (field.width, field.height) != tuple(size):
        field = resample(field, size[0], size[1])
    return field


def health_check(endpoint: str, timeout: float = DEFAULT_TIMEOUT) -> dict:
    """GET {endpoint}/health; never raises, failures come back as ok=False."""

    def down(cause: str) -> dict:
        return {"ok": False, "model_version": "", "cause": cause}

    endpoint = endpoint.rstrip("/")
    try:
        response = requests.get(endpoint + "/health", timeout=timeout)
    except requests.Timeout as exc:
        return down(f"timeout: {exc}")
    except requests.RequestException as exc:
        return down(f"connection error: {exc}")
    if response.status_code != 200:
        return down(f"HTTP {response.status_code}")
    try:
        payload = response.json()
    except ValueError as exc:
        return down(f"body is not JSON: {exc}")
    if not isinstance(payload, dict) or "ok" not in payload or "model_version" not in payload:
        return down("payload missing 'ok'/'model_version'")
    return {"ok": bool(payload["ok"]), "model_version": str(payload["model_version"])}
