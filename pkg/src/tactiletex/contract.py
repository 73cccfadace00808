"""Client-side conformance checks for the model server wire protocol.

Any server claiming to generate heightfields must pass every check here:
POST {endpoint}/generate takes an RGB PNG body and returns a 16-bit
grayscale PNG of the same size (or of the explicit ?size=WxH), carries
an X-Model-Version header, rejects garbage with a 4xx and a plain-text
reason, and answers GET {endpoint}/health with its version. Keeping the
battery in one importable place lets every server implementation be held
to the identical bar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import requests

from .heightfield import TextureImage, decode_heightfield_png, encode_texture_png

CONTRACT_CHECK_NAMES = (
    "health_ok",
    "generate_matches_input_size",
    "generate_honors_size_param",
    "generate_is_deterministic",
    "rejects_malformed_body",
    "rejects_bad_size_param",
    "rejects_oversize_request",
)

_PROBE_SIZE = (96, 64)


@dataclass(frozen=True)
class ContractCheck:
    name: str
    ok: bool
    detail: str


def probe_texture() -> TextureImage:
    """Deterministic RGB test card: gradients plus seeded speckle."""
    width, height = _PROBE_SIZE
    rng = np.random.default_rng(7)
    u = np.linspace(0.0, 1.0, width)[None, :]
    v = np.linspace(0.0, 1.0, height)[:, None]
    rgb = np.empty((height, width, 3))
    rgb[:, :, 0] = u
    rgb[:, :, 1] = v
    rgb[:, :, 2] = 0.5
    rgb = 0.7 * rgb + 0.3 * rng.random((height, width, 3))
    return TextureImage(np.round(rgb * 255.0) / 255.0)


def _fail(name: str, detail: str) -> ContractCheck:
    return ContractCheck(name, False, detail)


def _ok(name: str) -> ContractCheck:
    return ContractCheck(name, True, "")


def _check_health(endpoint: str, timeout: float) -> tuple[ContractCheck, str]:
    name = "health_ok"
    try:
        response = requests.get(endpoint + "/health", timeout=timeout)
    except requests.RequestException as exc:
        return _fail(name, f"request failed: {exc}"), ""
    if response.status_code != 200:
        return _fail(name, f"HTTP {response.status_code}"), ""
    try:
        payload = response.json()
    except ValueError:
        return _fail(name, "body is not JSON"), ""
    if payload.get("ok") is not True:
        return _fail(name, f"'ok' is {payload.get('ok')!r}"), ""
    version = payload.get("model_version")
    if not isinstance(version, str) or not version:
        return _fail(name, f"bad model_version {version!r}"), ""
    return _ok(name), version


def _post(endpoint: str, body: bytes, timeout: float, params=None, content_type="image/png"):
    return requests.post(
        endpoint + "/generate",
        data=body,
        headers={"Content-Type": content_type},
        params=params or {},
        timeout=timeout,
    )


def _check_generate(endpoint: str, timeout: float, version: str) -> list[ContractCheck]:
    body = encode_texture_png(probe_texture())
    out = []

    name = "generate_matches_input_size"
    first = None
    try:
        response = _post(endpoint, body, timeout)
        if response.status_code != 200:
            out.append(_fail(name, f"HTTP {response.status_code}: {response.text.strip()}"))
        elif not response.headers.get("content-type", "").startswith("image/png"):
            out.append(_fail(name, f"content-type {response.headers.get('content-type')!r}"))
        elif response.headers.get("x-model-version", "") != version:
            out.append(
                _fail(name, f"X-Model-Version {response.headers.get('x-model-version')!r}")
            )
        else:
            field = decode_heightfield_png(response.content)
            if field.source_depth != 16:
                out.append(_fail(name, f"expected 16-bit PNG, got {field.source_depth}-bit"))
            elif (field.width, field.height) != _PROBE_SIZE:
                out.append(_fail(name, f"size {field.width}x{field.height}"))
            else:
                first = field
                out.append(_ok(name))
    except (requests.RequestException, Exception) as exc:
        out.append(_fail(name, f"{exc}"))

    name = "generate_honors_size_param"
    try:
        response = _post(endpoint, body, timeout, params={"size": "48x32"})
        if response.status_code != 200:
            out.append(_fail(name, f"HTTP {response.status_code}: {response.text.strip()}"))
        else:
            field = decode_heightfield_png(response.content)
            if (field.width, field.height) != (48, 32):
                out.append(_fail(name, f"asked 48x32, got {field.width}x{field.height}"))
            else:
                out.append(_ok(name))
    except Exception as exc:
        out.append(_fail(name, f"{exc}"))

    name = "generate_is_deterministic"
    if first is None:
        out.append(_fail(name, "skipped: first generate failed"))
    else:
        try:
            response = _post(endpoint, body, timeout)
            repeat = decode_heightfield_png(response.content)
            if repeat.values.shape != first.values.shape or not np.array_equal(
                repeat.values, first.values
            ):
                out.append(_fail(name, "same input produced different pixels"))
            else:
                out.append(_ok(name))
        except Exception as exc:
            out.append(_fail(name, f"{exc}"))
    return out


def _expect_rejection(name: str, response) -> ContractCheck:
    if not (400 <= response.status_code < 500):
        return _fail(name, f"expected 4xx, got HTTP {response.status_code}")
    if response.headers.get("content-type", "").startswith("image/png"):
        return _fail(name, "rejection body must not be an image")
    if not response.text.strip():
        return _fail(name, "rejection carries no reason text")
    return ContractCheck(name, True, "")


def _check_rejections(endpoint: str, timeout: float) -> list[ContractCheck]:
    body = encode_texture_png(probe_texture())
    out = []

    name = "rejects_malformed_body"
    try:
        out.append(_expect_rejection(name, _post(endpoint, b"this is not a png", timeout)))
    except requests.RequestException as exc:
        out.append(_fail(name, f"{exc}"))

    name = "rejects_bad_size_param"
    try:
        check = _expect_rejection(name, _post(endpoint, body, timeout, params={"size": "0x16"}))
        if check.ok:
            check = _expect_rejection(
                name, _post(endpoint, body, timeout, params={"size": "banana"})
            )
        out.append(check)
    except requests.RequestException as exc:
        out.append(_fail(name, f"{exc}"))

    name = "rejects_oversize_request"
    try:
        out.append(
            _expect_rejection(name, _post(endpoint, body, timeout, params={"size": "8192x8192"}))
        )
    except requests.RequestException as exc:
        out.append(_fail(name, f"{exc}"))
    return out


def run_contract_checks(endpoint: str, timeout: float = 10.0) -> list[ContractCheck]:
    """Run the full battery against a live endpoint."""
    endpoint = endpoint.rstrip("/")
    health, version = _check_health(endpoint, timeout)
    checks = [health]
    checks.extend(_check_generate(endpoint, timeout, version))
    checks.extend(_check_rejections(endpoint, timeout))
    assert tuple(c.name for c in checks) == CONTRACT_CHECK_NAMES
    return checks
