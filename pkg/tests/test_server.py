import threading
import time

import numpy as np
import pytest
import uvicorn
from fastapi.testclient import TestClient

from tactiletex.contract import CONTRACT_CHECK_NAMES, run_contract_checks
from tactiletex.errors import GeneratorError
from tactiletex.generators import RemoteGenerator
from tactiletex.heightfield import (
    TextureImage,
    decode_heightfield_png,
    encode_heightfield_png,
    encode_texture_png,
    luminance,
)
from tactiletex.mesh import dumps_obj, loads_obj, make_tile
from tactiletex.server import (
    API_SCHEMA_VERSION,
    MODEL_STUB_VERSION,
    create_model_stub_app,
    create_studio_app,
)


def _texture_png(seed=3, size=24):
    rng = np.random.default_rng(seed)
    return encode_texture_png(TextureImage(rng.random((size, size, 3))))


def _white_png(size=16):
    return encode_texture_png(TextureImage(np.ones((size, size, 3))))


# ---------------------------------------------------------------------------
# model stub


@pytest.fixture()
def stub():
    return TestClient(create_model_stub_app())


def test_stub_generate_returns_luminance_16bit(stub):
    rng = np.random.default_rng(11)
    # pre-quantize to the 8-bit lattice so the PNG round trip is exact
    texture = TextureImage(np.round(rng.random((20, 30, 3)) * 255.0) / 255.0)
    response = stub.post(
        "/generate", content=encode_texture_png(texture), headers={"Content-Type": "image/png"}
    )
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("image/png")
    assert response.headers["x-model-version"] == MODEL_STUB_VERSION
    field = decode_heightfield_png(response.content)
    assert field.source_depth == 16
    assert (field.width, field.height) == (30, 20)
    np.testing.assert_allclose(field.values, luminance(texture).values, atol=1e-4)


def test_stub_health_reports_version(stub):
    assert stub.get("/health").json() == {"ok": True, "model_version": MODEL_STUB_VERSION}
    custom = TestClient(create_model_stub_app(version="night-2"))
    assert custom.get("/health").json()["model_version"] == "night-2"
    generated = custom.post(
        "/generate", content=_texture_png(), headers={"Content-Type": "image/png"}
    )
    assert generated.headers["x-model-version"] == "night-2"


def test_stub_rejects_wrong_content_type(stub):
    response = stub.post(
        "/generate", content=_texture_png(), headers={"Content-Type": "application/json"}
    )
    assert response.status_code == 415
    assert "image/png" in response.text


def test_stub_rejects_undecodable_body(stub):
    response = stub.post(
        "/generate", content=b"not a png at all", headers={"Content-Type": "image/png"}
    )
    assert response.status_code == 400
    assert not response.headers["content-type"].startswith("image/png")


def test_stub_honors_size_param(stub):
    response = stub.post(
        "/generate",
        params={"size": "48x12"},
        content=_texture_png(),
        headers={"Content-Type": "image/png"},
    )
    assert response.status_code == 200
    field = decode_heightfield_png(response.content)
    assert (field.width, field.height) == (48, 12)


@pytest.mark.parametrize("size", ["0x16", "banana", "8x", "3x4x5"])
def test_stub_rejects_bad_size(stub, size):
    response = stub.post(
        "/generate", params={"size": size}, content=_texture_png(),
        headers={"Content-Type": "image/png"},
    )
    assert response.status_code == 400


def test_stub_rejects_oversize(stub):
    response = stub.post(
        "/generate", params={"size": "8192x8192"}, content=_texture_png(),
        headers={"Content-Type": "image/png"},
    )
    assert response.status_code == 413


# ---------------------------------------------------------------------------
# studio API


@pytest.fixture()
def studio():
    return TestClient(create_studio_app(target_faces=500))


def _tile_obj_bytes(size=(50.0, 50.0, 10.0), target=500):
    return dumps_obj(make_tile(size, target)).encode()


def _new_session(client, **tile_kwargs):
    response = client.post("/sessions", content=_tile_obj_bytes(**tile_kwargs))
    assert response.status_code == 201, response.text
    return response.json()


def test_session_create_reports_counts(studio):
    payload = _new_session(studio)
    assert payload["schema_version"] == API_SCHEMA_VERSION
    assert payload["face_count"] >= 500
    assert payload["vertex_count"] > 0
    assert payload["session_id"]


def test_session_rejects_non_obj_upload(studio):
    response = studio.post("/sessions", content=b"\x89PNG not a mesh")
    assert response.status_code == 400
    assert "error" in response.json()


def test_unknown_session_is_404(studio):
    assert studio.get("/sessions/nope/mesh").status_code == 404
    assert studio.post("/sessions/nope/texture", content=_white_png()).status_code == 404


def test_stylize_before_texture_conflicts(studio):
    sid = _new_session(studio)["session_id"]
    response = studio.post(f"/sessions/{sid}/stylize", json={"magnification": 1.0})
    assert response.status_code == 409
    assert studio.get(f"/sessions/{sid}/heightfield").status_code == 409
    assert studio.get(f"/sessions/{sid}/mesh", params={"which": "stylized"}).status_code == 409


def test_texture_upload_generates_heightfield(studio):
    sid = _new_session(studio)["session_id"]
    response = studio.post(f"/sessions/{sid}/texture", content=_texture_png(size=32))
    assert response.status_code == 200
    payload = response.json()
    assert payload["status"] == "generated"
    assert payload["heightfield"] == {"width": 32, "height": 32}

    png = studio.get(f"/sessions/{sid}/heightfield")
    assert png.status_code == 200
    field = decode_heightfield_png(png.content)
    assert field.source_depth == 16
    assert (field.width, field.height) == (32, 32)


def test_stylize_zero_magnification_keeps_geometry(studio):
    sid = _new_session(studio)["session_id"]
    studio.post(f"/sessions/{sid}/texture", content=_texture_png())
    response = studio.post(f"/sessions/{sid}/stylize", json={"magnification": 0.0})
    assert response.status_code == 200
    assert response.json()["rms"] == pytest.approx(0.0, abs=1e-12)
    original = loads_obj(studio.get(f"/sessions/{sid}/mesh").text)
    stylized = loads_obj(
        studio.get(f"/sessions/{sid}/mesh", params={"which": "stylized"}).text
    )
    np.testing.assert_allclose(stylized.vertices, original.vertices, atol=1e-9)


def test_stylize_magnification_scales_linearly(studio):
    sid = _new_session(studio)["session_id"]
    studio.post(f"/sessions/{sid}/texture", content=_texture_png(seed=8))
    base = loads_obj(studio.get(f"/sessions/{sid}/mesh").text).vertices

    studio.post(f"/sessions/{sid}/stylize", json={"magnification": 1.0})
    once = loads_obj(
        studio.get(f"/sessions/{sid}/mesh", params={"which": "stylized"}).text
    ).vertices
    studio.post(f"/sessions/{sid}/stylize", json={"magnification": 2.0})
    twice = loads_obj(
        studio.get(f"/sessions/{sid}/mesh", params={"which": "stylized"}).text
    ).vertices

    # re-stylizing starts from the original, so magnification is absolute
    np.testing.assert_allclose(twice - base, 2.0 * (once - base), atol=1e-8)


def test_stylize_amplitude_is_unit_cube_scaled(studio):
    # normalized 50x50x10 tile spans z in [-0.1, 0.1]; a full-white texture
    # displaces the top sheet by exactly the default amplitude
    sid = _new_session(studio)["session_id"]
    studio.post(f"/sessions/{sid}/texture", content=_white_png())
    studio.post(f"/sessions/{sid}/stylize", json={"magnification": 1.0})
    stylized = loads_obj(
        studio.get(f"/sessions/{sid}/mesh", params={"which": "stylized"}).text
    )
    assert stylized.vertices[:, 2].max() == pytest.approx(0.1 + 0.05, abs=1e-8)


def test_stylize_validates_payload(studio):
    sid = _new_session(studio)["session_id"]
    studio.post(f"/sessions/{sid}/texture", content=_texture_png())
    assert studio.post(f"/sessions/{sid}/stylize", json={}).status_code == 400
    assert (
        studio.post(f"/sessions/{sid}/stylize", json={"magnification": "big"}).status_code
        == 400
    )
    assert (
        studio.post(f"/sessions/{sid}/stylize", json={"magnification": True}).status_code
        == 400
    )
    bad = studio.post(
        f"/sessions/{sid}/stylize", content=b"{", headers={"Content-Type": "application/json"}
    )
    assert bad.status_code == 400


def test_mesh_route_validates_which(studio):
    sid = _new_session(studio)["session_id"]
    assert studio.get(f"/sessions/{sid}/mesh", params={"which": "banana"}).status_code == 400


def test_sessions_evict_least_recently_used():
    client = TestClient(create_studio_app(target_faces=48, session_capacity=2))
    first = _new_session(client, size=(10.0, 10.0, 4.0), target=12)["session_id"]
    second = _new_session(client, size=(10.0, 10.0, 4.0), target=12)["session_id"]
    assert client.get(f"/sessions/{first}/mesh").status_code == 200  # refresh first
    third = _new_session(client, size=(10.0, 10.0, 4.0), target=12)["session_id"]
    assert client.get(f"/sessions/{second}/mesh").status_code == 404
    assert client.get(f"/sessions/{first}/mesh").status_code == 200
    assert client.get(f"/sessions/{third}/mesh").status_code == 200


def test_studio_health_names_generator(studio):
    payload = studio.get("/health").json()
    assert payload == {
        "schema_version": API_SCHEMA_VERSION,
        "ok": True,
        "generator": "baseline_luminance",
    }


def test_studio_refuses_passthrough_generator():
    from tactiletex.generators import GroundtruthPassthrough

    with pytest.raises(GeneratorError):
        create_studio_app(generator=GroundtruthPassthrough())


def test_studio_remote_failure_maps_to_502():
    client = TestClient(
        create_studio_app(
            generator=RemoteGenerator("http://127.0.0.1:9", timeout=0.3), target_faces=48
        )
    )
    sid = _new_session(client, size=(10.0, 10.0, 4.0), target=12)["session_id"]
    response = client.post(f"/sessions/{sid}/texture", content=_texture_png())
    assert response.status_code == 502
    assert "heightfield generation failed" in response.json()["error"]


def test_studio_answers_cors_preflight(studio):
    response = studio.options(
        "/sessions",
        headers={
            "Origin": "http://localhost:5173",
            "Access-Control-Request-Method": "POST",
        },
    )
    assert response.status_code == 200
    assert response.headers["access-control-allow-origin"] == "*"


# ---------------------------------------------------------------------------
# wire-protocol contract against a live server


class _LiveServer:
    def __init__(self, app):
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self):
        self._thread.start()
        deadline = time.monotonic() + 10.0
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10.0)


def test_model_stub_passes_full_contract():
    with _LiveServer(create_model_stub_app()) as endpoint:
        checks = run_contract_checks(endpoint, timeout=5.0)
    assert tuple(c.name for c in checks) == CONTRACT_CHECK_NAMES
    failures = [(c.name, c.detail) for c in checks if not c.ok]
    assert failures == []


def test_contract_flags_depth_regression():
    # a stub that silently downgrades output to 8-bit must fail exactly the
    # checks that depend on a well-formed first generate
    app = create_model_stub_app()

    @app.middleware("http")
    async def degrade(request, call_next):
        from fastapi.responses import Response as RawResponse

        response = await call_next(request)
        if request.url.path == "/generate" and response.status_code == 200:
            body = b"".join([chunk async for chunk in response.body_iterator])
            field = decode_heightfield_png(body)
            return RawResponse(
                encode_heightfield_png(field, depth=8),
                media_type="image/png",
                headers={"X-Model-Version": response.headers.get("x-model-version", "")},
            )
        return response

    with _LiveServer(app) as endpoint:
        checks = run_contract_checks(endpoint, timeout=5.0)
    by_name = {c.name: c for c in checks}
    assert not by_name["generate_matches_input_size"].ok
    assert "16-bit" in by_name["generate_matches_input_size"].detail
    assert not by_name["generate_is_deterministic"].ok
    assert by_name["health_ok"].ok
    assert by_name["rejects_malformed_body"].ok


def test_cli_health_contract_mode():
    from click.testing import CliRunner

    from tactiletex.cli import cli

    runner = CliRunner()
    with _LiveServer(create_model_stub_app()) as endpoint:
        good = runner.invoke(cli, ["health", endpoint, "--contract"])
        plain = runner.invoke(cli, ["health", endpoint])
    assert good.exit_code == 0, good.output
    passes = [line for line in good.output.splitlines() if line.startswith("PASS")]
    assert len(passes) == len(CONTRACT_CHECK_NAMES)
    assert plain.exit_code == 0
    assert '"ok": true' in plain.output
