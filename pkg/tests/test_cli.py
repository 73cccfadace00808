from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from tactiletex import stattests
from tactiletex.cli import cli
from tactiletex.heightfield import Heightfield, save_heightfield
from tactiletex.mesh import load_obj


@pytest.fixture()
def runner():
    return CliRunner()


def _ok(result):
    assert result.exit_code == 0, result.output + str(result.exception)
    return result


def _sinusoid(path, n=64):
    y, x = np.mgrid[0:n, 0:n] / n
    values = 0.5 + 0.25 * np.sin(2 * np.pi * x) + 0.25 * np.cos(2 * np.pi * y)
    lo, hi = values.min(), values.max()
    save_heightfield(Heightfield((values - lo) / (hi - lo)), path, depth=16)


# ---------------------------------------------------------------------------
# geometry pipeline


def test_tile_writes_obj(runner, tmp_path):
    out = tmp_path / "tile.obj"
    _ok(runner.invoke(cli, ["tile", "--size-mm", "50", "50", "10", "--target-faces", "500", "-o", str(out)]))
    mesh = load_obj(out)
    assert mesh.face_count >= 500
    assert mesh.uvs is not None


def test_apply_zero_magnification_is_identity(runner, tmp_path):
    tile, field, out = tmp_path / "t.obj", tmp_path / "h.png", tmp_path / "o.obj"
    _sinusoid(field)
    _ok(runner.invoke(cli, ["tile", "--size-mm", "40", "40", "8", "--target-faces", "200", "-o", str(tile)]))
    _ok(
        runner.invoke(
            cli,
            ["apply", "--mesh", str(tile), "--heightfield", str(field), "--magnification", "0", "-o", str(out)],
        )
    )
    np.testing.assert_allclose(load_obj(out).vertices, load_obj(tile).vertices, atol=1e-9)


def test_full_chain_recovers_sinusoid(runner, tmp_path):
    tile = tmp_path / "tile.obj"
    field = tmp_path / "wave.png"
    modified = tmp_path / "styled.obj"
    recovered = tmp_path / "back.png"
    _sinusoid(field)

    _ok(runner.invoke(cli, ["tile", "--size-mm", "50", "50", "10", "--target-faces", "8000", "-o", str(tile)]))
    _ok(
        runner.invoke(
            cli,
            [
                "apply",
                "--mesh", str(tile),
                "--heightfield", str(field),
                "--magnification", "1.0",
                "--amplitude-mm", "1.0",
                "-o", str(modified),
            ],
        )
    )
    extract = _ok(
        runner.invoke(
            cli,
            [
                "extract",
                "--original", str(tile),
                "--modified", str(modified),
                "--resolution", "64x64",
                "-o", str(recovered),
            ],
        )
    )
    info = json.loads(extract.output)
    assert info["coverage"] == 1.0
    assert info["displacement_mm"]["max"] <= 1.0 + 1e-9

    metrics = _ok(runner.invoke(cli, ["metrics", "--a", str(field), "--b", str(recovered)]))
    payload = json.loads(metrics.output)
    assert set(payload) == {"rms_a", "rms_b", "mse", "ssim", "resolution", "pearson_r"}
    assert payload["pearson_r"] >= 0.95


def test_apply_respects_amplitude(runner, tmp_path):
    tile, field = tmp_path / "t.obj", tmp_path / "h.png"
    save_heightfield(Heightfield(np.ones((8, 8))), field, depth=16)
    _ok(runner.invoke(cli, ["tile", "--size-mm", "10", "10", "4", "--target-faces", "100", "-o", str(tile)]))
    one, three = tmp_path / "m1.obj", tmp_path / "m3.obj"
    base_args = ["apply", "--mesh", str(tile), "--heightfield", str(field)]
    _ok(runner.invoke(cli, base_args + ["--amplitude-mm", "1", "-o", str(one)]))
    _ok(runner.invoke(cli, base_args + ["--amplitude-mm", "1", "--magnification", "3", "-o", str(three)]))
    top_shift_1 = load_obj(one).vertices[:, 2].max() - 4.0
    top_shift_3 = load_obj(three).vertices[:, 2].max() - 4.0
    assert top_shift_1 == pytest.approx(1.0, abs=1e-9)
    assert top_shift_3 == pytest.approx(3.0, abs=1e-9)


def test_extract_rejects_bad_resolution(runner, tmp_path):
    result = runner.invoke(
        cli, ["extract", "--original", "a.obj", "--modified", "b.obj", "--resolution", "banana", "-o", "x.png"]
    )
    assert result.exit_code != 0


# ---------------------------------------------------------------------------
# stats front end


def test_stats_welch_t_matches_library(runner, tmp_path):
    path = tmp_path / "long.csv"
    rng = np.random.default_rng(0)
    rows = ["group,value"]
    a = rng.normal(0, 1, 10)
    b = rng.normal(0.8, 2, 12)
    rows += [f"a,{v}" for v in a] + [f"b,{v}" for v in b]
    path.write_text("\n".join(rows) + "\n")

    result = _ok(runner.invoke(cli, ["stats", "welch-t", "--input", str(path)]))
    got = json.loads(result.output)["welch_t"]
    want = stattests.welch_t(a, b)
    assert got["statistic"] == pytest.approx(want.statistic, abs=1e-10)
    assert got["p_value"] == pytest.approx(want.p_value, abs=1e-10)


def test_stats_welch_t_needs_two_groups(runner, tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("group,value\na,1\na,2\n")
    assert runner.invoke(cli, ["stats", "welch-t", "--input", str(path)]).exit_code != 0


def test_stats_anova_and_posthoc(runner, tmp_path):
    path = tmp_path / "long.csv"
    rng = np.random.default_rng(1)
    rows = ["group,value"]
    for name, mu in (("x", 0.0), ("y", 1.0), ("z", 3.0)):
        rows += [f"{name},{v}" for v in rng.normal(mu, 1 + mu, 9)]
    path.write_text("\n".join(rows) + "\n")

    anova = json.loads(_ok(runner.invoke(cli, ["stats", "welch-anova", "--input", str(path)])).output)
    assert anova["welch_anova"]["group_names"] == ["x", "y", "z"]
    posthoc = json.loads(_ok(runner.invoke(cli, ["stats", "games-howell", "--input", str(path)])).output)
    assert len(posthoc["games_howell"]) == 3


def test_stats_friedman_wide_with_pairwise(runner, tmp_path):
    path = tmp_path / "wide.csv"
    rng = np.random.default_rng(2)
    matrix = rng.integers(1, 6, (10, 3))
    lines = ["c1,c2,c3"] + [",".join(str(v) for v in row) for row in matrix]
    path.write_text("\n".join(lines) + "\n")

    result = _ok(runner.invoke(cli, ["stats", "friedman", "--input", str(path), "--pairwise"]))
    payload = json.loads(result.output)
    assert payload["conditions"] == ["c1", "c2", "c3"]
    assert "statistic" in payload["friedman"]
    assert len(payload["pairwise"]) == 3
    assert all("p_holm" in p for p in payload["pairwise"])


def test_stats_friedman_long_form(runner, tmp_path):
    path = tmp_path / "ratings.csv"
    lines = ["subject,condition,value"]
    for s in range(6):
        for c, base in (("A", 1), ("B", 2), ("C", 3)):
            lines.append(f"s{s},{c},{base + (s % 3) * 0.5}")
    path.write_text("\n".join(lines) + "\n")
    result = _ok(runner.invoke(cli, ["stats", "friedman", "--input", str(path), "--long"]))
    assert json.loads(result.output)["conditions"] == ["A", "B", "C"]


def test_stats_wilcoxon(runner, tmp_path):
    path = tmp_path / "pairs.csv"
    path.write_text("before,after\n1,2\n2,4\n3,5\n4,8\n5,9\n6,12\n")
    result = _ok(runner.invoke(cli, ["stats", "wilcoxon", "--input", str(path)]))
    payload = json.loads(result.output)
    assert payload["wilcoxon"]["statistic"] == 0.0
    assert payload["wilcoxon"]["p_value"] == pytest.approx(0.03125)


def test_stats_spearman(runner, tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("u,v\n1,1\n2,4\n3,9\n4,16\n5,25\n")
    result = _ok(runner.invoke(cli, ["stats", "spearman", "--input", str(path), "--col-a", "u", "--col-b", "v"]))
    assert json.loads(result.output)["spearman"]["statistic"] == pytest.approx(1.0)


def test_stats_holm(runner, tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("p\n0.01\n0.04\n0.03\n")
    result = _ok(runner.invoke(cli, ["stats", "holm", "--input", str(path)]))
    np.testing.assert_allclose(json.loads(result.output)["p_holm"], [0.03, 0.06, 0.06], atol=1e-12)


# ---------------------------------------------------------------------------
# dataset + eval + plot


def test_dataset_commands_round_trip(runner, tmp_path):
    root = tmp_path / "corpus"
    _ok(
        runner.invoke(
            cli,
            [
                "dataset", "synth", str(root),
                "--entries-per-category", "2",
                "--categories", "waves,ridges",
                "--resolution", "48x48",
                "--seed", "5",
            ],
        )
    )
    manifest_path = root / "manifest.json"
    assert manifest_path.exists()

    split = _ok(runner.invoke(cli, ["dataset", "split", str(manifest_path), "--train-fraction", "0.5"]))
    assert "2 train, 2 test" in split.output

    augment = _ok(runner.invoke(cli, ["dataset", "augment", str(manifest_path)]))
    assert "10 entries" in augment.output  # 4 + 3 rotations x 2 train


def test_eval_formative_and_plot(runner, tmp_path, small_corpus):
    manifest_path = small_corpus.root / "manifest.json"
    report_path = tmp_path / "formative.json"
    result = _ok(
        runner.invoke(
            cli,
            [
                "eval", "formative",
                "--manifest", str(manifest_path),
                "--generator", "groundtruth",
                "--target-faces", "2000",
                "--resolution", "64x64",
                "-o", str(report_path),
            ],
        )
    )
    assert "t=0.000" in result.output
    report = json.loads(report_path.read_text())
    assert report["kind"] == "formative"

    svg_path = tmp_path / "box.svg"
    _ok(runner.invoke(cli, ["plot", str(report_path), str(svg_path), "--metric", "rms"]))
    head = svg_path.read_bytes()[:200]
    assert b"<svg" in head or b"<?xml" in head


def test_eval_technical_via_cli(runner, tmp_path, small_corpus):
    manifest_path = small_corpus.root / "manifest.json"
    report_path = tmp_path / "technical.json"
    _ok(
        runner.invoke(
            cli,
            [
                "eval", "technical",
                "--manifest", str(manifest_path),
                "--generator", "baseline",
                "--generator", "groundtruth",
                "-o", str(report_path),
            ],
        )
    )
    report = json.loads(report_path.read_text())
    assert set(report["candidates"]) == {"baseline_luminance", "groundtruth_passthrough"}


def test_eval_technical_duplicate_generators_rejected(runner, tmp_path, small_corpus):
    manifest_path = small_corpus.root / "manifest.json"
    result = runner.invoke(
        cli,
        [
            "eval", "technical",
            "--manifest", str(manifest_path),
            "--generator", "baseline",
            "--generator", "baseline_luminance",
            "-o", str(tmp_path / "x.json"),
        ],
    )
    assert result.exit_code != 0


def test_plot_technical_report(runner, tmp_path, small_corpus):
    from tactiletex.evaluate import run_technical_eval, write_report
    from tactiletex.generators import BaselineLuminance, GroundtruthPassthrough

    report = run_technical_eval(
        small_corpus, {"a": BaselineLuminance(), "b": GroundtruthPassthrough()}
    )
    report_path = tmp_path / "tech.json"
    write_report(report, report_path)
    out = tmp_path / "mse.svg"
    _ok(runner.invoke(cli, ["plot", str(report_path), str(out), "--metric", "mse"]))
    assert out.stat().st_size > 0


# ---------------------------------------------------------------------------
# health + process-level behavior


def test_health_dead_endpoint_exits_nonzero(runner):
    result = runner.invoke(cli, ["health", "http://127.0.0.1:9", "--timeout", "0.5"])
    assert result.exit_code == 1
    assert '"ok": false' in result.output


def test_cli_entry_point_reports_package_errors(tmp_path):
    # a mesh file that is not OBJ -> "error: ..." on stderr, exit 1
    bad = tmp_path / "junk.obj"
    bad.write_text("this is not an obj file\n")
    proc = subprocess.run(
        [
            sys.executable, "-m", "tactiletex.cli",
            "extract", "--original", str(bad), "--modified", str(bad),
            "--resolution", "16x16", "-o", str(tmp_path / "x.png"),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert proc.stderr.startswith("error:")


def test_cli_entry_point_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "tactiletex.cli", "tile", "--no-such-flag"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
