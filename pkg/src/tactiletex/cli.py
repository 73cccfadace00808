"""Command line front end."""

from __future__ import annotations

import csv as _csv
import json
import os

import click
import numpy as np

from . import dataset as ds
from . import evaluate, stattests
from .contract import run_contract_checks
from .displace import DisplacementParams, apply_heightfield
from .errors import TactiletexError
from .extract import extract_heightfield
from .generators import DEFAULT_TIMEOUT, describe, health_check, parse_generator_spec
from .heightfield import load_heightfield, save_heightfield
from .mesh import ACTIVE_GROUP, load_obj, make_tile, save_obj
from .metrics import compare, pearson_r

ENV_REMOTE_ENDPOINT = "TACTILETEX_REMOTE_ENDPOINT"
ENV_REMOTE_TIMEOUT = "TACTILETEX_REMOTE_TIMEOUT"


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    try:
        w, h = (int(p) for p in text.lower().split("x"))
        if w < 1 or h < 1:
            raise ValueError
        return w, h
    except ValueError:
        raise click.BadParameter(f"{what} must look like 256x256, got {text!r}") from None


def _resolve_generator(spec: str):
    if spec in ("remote", "remote="):
        endpoint = os.environ.get(ENV_REMOTE_ENDPOINT, "")
        if not endpoint:
            raise click.BadParameter(
                f"generator 'remote' needs {ENV_REMOTE_ENDPOINT} set or an explicit remote=URL"
            )
        spec = f"remote={endpoint}"
    timeout = float(os.environ.get(ENV_REMOTE_TIMEOUT, DEFAULT_TIMEOUT))
    return parse_generator_spec(spec, timeout=timeout)


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@click.group()
def cli():
    """Tactile texture tooling: tiles, displacement, extraction, evaluation."""


@cli.command()
@click.option("--size-mm", nargs=3, type=float, default=(50.0, 50.0, 10.0), show_default=True)
@click.option("--target-faces", default=25000, show_default=True, type=int)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def tile(size_mm, target_faces, out):
    """Write a printable reference tile as OBJ."""
    if min(size_mm) <= 0:
        raise click.BadParameter("--size-mm values must be positive")
    mesh = make_tile(size_mm=size_mm, target_faces=target_faces)
    save_obj(mesh, out)
    click.echo(f"wrote {out}: {mesh.vertex_count} vertices, {mesh.face_count} faces")


@cli.command("apply")
@click.option("--mesh", "mesh_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--heightfield", "height_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--magnification", default=1.0, show_default=True, type=float)
@click.option("--amplitude-mm", default=1.0, show_default=True, type=float)
@click.option(
    "--active-group",
    default=None,
    help=f"Face group allowed to move; defaults to '{ACTIVE_GROUP}' when present, else all vertices.",
)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def apply_cmd(mesh_path, height_path, magnification, amplitude_mm, active_group, out):
    """Displace a mesh by a heightfield and write the result."""
    mesh = load_obj(mesh_path)
    field = load_heightfield(height_path)
    group = active_group
    if group is None and mesh.face_groups is not None and ACTIVE_GROUP in mesh.face_groups:
        group = ACTIVE_GROUP
    mask = mesh.group_vertices(group) if group is not None else None
    params = DisplacementParams(
        magnification=magnification, amplitude_mm=amplitude_mm, active_mask=mask
    )
    displaced = apply_heightfield(mesh, field, params)
    save_obj(displaced, out)
    moved = len(params.resolve_mask(mesh))
    click.echo(f"wrote {out}: displaced {moved} of {mesh.vertex_count} vertices")


@cli.command("extract")
@click.option("--original", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--modified", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--resolution", default="256x256", show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def extract_cmd(original, modified, resolution, out):
    """Recover a normalized heightfield from an original/modified mesh pair."""
    result = extract_heightfield(
        load_obj(original), load_obj(modified), resolution=_parse_pair(resolution, "--resolution")
    )
    save_heightfield(result.heightfield, out, depth=16)
    _echo_json(
        {
            "out": out,
            "coverage": result.coverage,
            "displacement_mm": result.stats.to_dict(),
        }
    )


@cli.command("metrics")
@click.option("--a", "image_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "image_b", required=True, type=click.Path(exists=True, dir_okay=False))
def metrics_cmd(image_a, image_b):
    """RMS roughness, MSE, SSIM and Pearson r between two heightfield PNGs."""
    a = load_heightfield(image_a)
    b = load_heightfield(image_b)
    payload = compare(a, b).to_dict()
    payload["pearson_r"] = pearson_r(a, b)
    _echo_json(payload)


# ---------------------------------------------------------------------------
# stats

_INPUT = click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))


@cli.group()
def stats():
    """Statistical tests over CSV data."""


def _long_groups(input_path, group_col, value_col):
    return stattests.read_long_csv(input_path, group_col=group_col, value_col=value_col)


@stats.command("welch-t")
@_INPUT
@click.option("--group-col", default="group", show_default=True)
@click.option("--value-col", default="value", show_default=True)
def stats_welch_t(input_path, group_col, value_col):
    """Welch t test; the CSV must contain exactly two groups."""
    samples = _long_groups(input_path, group_col, value_col)
    if len(samples) != 2:
        raise click.BadParameter(f"welch-t needs exactly 2 groups, found {len(samples)}")
    _echo_json({"welch_t": stattests.welch_t(*samples).to_dict()})


@stats.command("welch-anova")
@_INPUT
@click.option("--group-col", default="group", show_default=True)
@click.option("--value-col", default="value", show_default=True)
def stats_welch_anova(input_path, group_col, value_col):
    """Welch one-way ANOVA over two or more groups."""
    samples = _long_groups(input_path, group_col, value_col)
    _echo_json({"welch_anova": stattests.welch_anova(samples).to_dict()})


@stats.command("games-howell")
@_INPUT
@click.option("--group-col", default="group", show_default=True)
@click.option("--value-col", default="value", show_default=True)
def stats_games_howell(input_path, group_col, value_col):
    """Games-Howell pairwise post-hoc comparisons."""
    samples = _long_groups(input_path, group_col, value_col)
    _echo_json({"games_howell": [e.to_dict() for e in stattests.games_howell(samples)]})


@stats.command("friedman")
@_INPUT
@click.option("--long", "long_form", is_flag=True, help="Long form subject/condition/value rows.")
@click.option("--subject-col", default="subject", show_default=True)
@click.option("--condition-col", default="condition", show_default=True)
@click.option("--value-col", default="value", show_default=True)
@click.option("--pairwise", is_flag=True, help="Add Wilcoxon pairs with Holm correction.")
def stats_friedman(input_path, long_form, subject_col, condition_col, value_col, pairwise):
    """Friedman test over a subjects x conditions matrix (wide CSV default)."""
    if long_form:
        names, matrix = stattests.read_ratings_csv(
            input_path, subject_col=subject_col, condition_col=condition_col, value_col=value_col
        )
    else:
        names, matrix = stattests.read_wide_csv(input_path)
    payload = {"conditions": names, "friedman": stattests.friedman(matrix).to_dict()}
    if pairwise:
        pairs = []
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                result = stattests.wilcoxon_signed_rank(matrix[:, i], matrix[:, j])
                pairs.append({"a": names[i], "b": names[j], "wilcoxon": result.to_dict()})
        for pair, p in zip(pairs, stattests.holm_correct([p["wilcoxon"]["p_value"] for p in pairs])):
            pair["p_holm"] = p
        payload["pairwise"] = pairs
    _echo_json(payload)


@stats.command("wilcoxon")
@_INPUT
def stats_wilcoxon(input_path):
    """Paired Wilcoxon signed-rank over a two-column wide CSV."""
    names, matrix = stattests.read_wide_csv(input_path)
    if len(names) != 2:
        raise click.BadParameter(f"expected exactly 2 columns, got {len(names)}")
    result = stattests.wilcoxon_signed_rank(matrix[:, 0], matrix[:, 1])
    _echo_json({"a": names[0], "b": names[1], "wilcoxon": result.to_dict()})


@stats.command("spearman")
@_INPUT
@click.option("--col-a", required=True)
@click.option("--col-b", required=True)
def stats_spearman(input_path, col_a, col_b):
    """Spearman rank correlation between two CSV columns."""
    with open(input_path, newline="") as fh:
        rows = list(_csv.DictReader(fh))
    if not rows or col_a not in rows[0] or col_b not in rows[0]:
        raise click.BadParameter(f"need columns {col_a!r} and {col_b!r} in {input_path}")
    a = np.array([float(r[col_a]) for r in rows])
    b = np.array([float(r[col_b]) for r in rows])
    _echo_json({"spearman": stattests.spearman(a, b).to_dict()})


@stats.command("holm")
@_INPUT
@click.option("--p-col", default="p", show_default=True)
def stats_holm(input_path, p_col):
    """Holm step-down correction over a CSV column of p-values."""
    with open(input_path, newline="") as fh:
        rows = list(_csv.DictReader(fh))
    if not rows or p_col not in rows[0]:
        raise click.BadParameter(f"need column {p_col!r} in {input_path}")
    p_values = [float(r[p_col]) for r in rows]
    _echo_json({"p": p_values, "p_holm": stattests.holm_correct(p_values)})


# ---------------------------------------------------------------------------
# dataset


@cli.group()
def dataset():
    """Create and maintain texture/heightfield corpora."""


@dataset.command("synth")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--entries-per-category", default=8, show_default=True, type=int)
@click.option("--categories", default=",".join(ds.FLAVORS), show_default=True)
@click.option("--resolution", default="256x256", show_default=True)
@click.option("--seed", default=42, show_default=True, type=int)
def dataset_synth(out_dir, entries_per_category, categories, resolution, seed):
    """Generate a synthetic paired corpus with a manifest."""
    manifest = ds.generate_synthetic_corpus(
        out_dir,
        entries_per_category=entries_per_category,
        resolution=_parse_pair(resolution, "--resolution"),
        seed=seed,
        categories=tuple(c.strip() for c in categories.split(",") if c.strip()),
    )
    click.echo(f"wrote {out_dir}/manifest.json: {len(manifest)} entries")


@dataset.command("split")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--train-fraction", default=0.9, show_default=True, type=float)
@click.option("--seed", default=42, show_default=True, type=int)
def dataset_split(manifest_path, train_fraction, seed):
    """Assign stratified train/test splits in place."""
    manifest = ds.assign_split(
        ds.load_manifest(manifest_path), train_fraction=train_fraction, seed=seed
    )
    ds.save_manifest(manifest, manifest_path)
    click.echo(
        f"split {len(manifest)} entries: "
        f"{len(manifest.by_split(ds.SPLIT_TRAIN))} train, "
        f"{len(manifest.by_split(ds.SPLIT_TEST))} test"
    )


@dataset.command("augment")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
def dataset_augment(manifest_path):
    """Add quarter-turn rotations of every training entry."""
    manifest = ds.augment_rotations(ds.load_manifest(manifest_path))
    ds.save_manifest(manifest, manifest_path)
    click.echo(f"augmented to {len(manifest)} entries")


# ---------------------------------------------------------------------------
# evaluation


@cli.group("eval")
def eval_group():
    """Run generator evaluations and write JSON reports."""


@eval_group.command("formative")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--generator", "spec", required=True, help="baseline | groundtruth | remote=URL")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--split", default=None, type=click.Choice([ds.SPLIT_TRAIN, ds.SPLIT_TEST]))
@click.option("--target-faces", default=25000, show_default=True, type=int)
@click.option("--resolution", default="256x256", show_default=True)
@click.option("--magnification", default=1.0, show_default=True, type=float)
@click.option("--amplitude-mm", default=1.0, show_default=True, type=float)
def eval_formative(manifest_path, spec, out, split, target_faces, resolution, magnification, amplitude_mm):
    """Tile round-trip comparison of one generator vs groundtruth."""
    report = evaluate.run_formative(
        ds.load_manifest(manifest_path),
        _resolve_generator(spec),
        split=split,
        target_faces=target_faces,
        resolution=_parse_pair(resolution, "--resolution"),
        magnification=magnification,
        amplitude_mm=amplitude_mm,
    )
    evaluate.write_report(report, out)
    t = report["rms_test"]
    click.echo(
        f"wrote {out}: n={report['n_entries']} failed={report['n_failed']} "
        f"rms t={t['statistic']:.3f} p={t['p_value']:.4g}"
    )


@eval_group.command("technical")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--generator",
    "specs",
    multiple=True,
    required=True,
    help="Candidate generator; repeat the flag (at least twice).",
)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--split", default=None, type=click.Choice([ds.SPLIT_TRAIN, ds.SPLIT_TEST]))
def eval_technical(manifest_path, specs, out, split):
    """Image-space comparison of several generators."""
    candidates = {}
    for spec in specs:
        generator = _resolve_generator(spec)
        label = describe(generator)
        if label in candidates:
            raise click.BadParameter(f"duplicate generator {label!r}")
        candidates[label] = generator
    report = evaluate.run_technical_eval(ds.load_manifest(manifest_path), candidates, split=split)
    evaluate.write_report(report, out)
    anova = report["rms_anova"]
    click.echo(
        f"wrote {out}: n={report['n_entries']} failed={report['n_failed']} "
        f"rms F={anova['statistic']:.3f} p={anova['p_value']:.4g}"
    )


@cli.command("plot")
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--metric", default="rms", show_default=True, type=click.Choice(["rms", "mse", "ssim"]))
def plot_cmd(report_path, out, metric):
    """Render a report metric as an SVG boxplot."""
    from .plots import plot_report

    plot_report(evaluate.load_report(report_path), out, metric=metric)
    click.echo(f"wrote {out}")


# ---------------------------------------------------------------------------
# servers


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--generator", "spec", default="baseline", show_default=True)
@click.option("--session-capacity", default=32, show_default=True, type=int)
@click.option("--target-faces", default=25000, show_default=True, type=int)
def serve_cmd(host, port, spec, session_capacity, target_faces):
    """Run the interactive mesh stylization API."""
    import uvicorn

    from .server import create_studio_app

    app = create_studio_app(
        generator=_resolve_generator(spec),
        session_capacity=session_capacity,
        target_faces=target_faces,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command("serve-model")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8001, show_default=True, type=int)
def serve_model_cmd(host, port):
    """Run the reference (luminance) model server."""
    import uvicorn

    from .server import create_model_stub_app

    uvicorn.run(create_model_stub_app(), host=host, port=port, log_level="warning")


@cli.command("health")
@click.argument("endpoint")
@click.option("--contract", is_flag=True, help="Run the full wire-protocol battery.")
@click.option("--timeout", default=10.0, show_default=True, type=float)
def health_cmd(endpoint, contract, timeout):
    """Check a model server; exits non-zero when it is unhealthy."""
    if not contract:
        status = health_check(endpoint, timeout=timeout)
        _echo_json(status)
        if not status["ok"]:
            raise SystemExit(1)
        return
    checks = run_contract_checks(endpoint, timeout=timeout)
    for check in checks:
        line = f"{'PASS' if check.ok else 'FAIL'} {check.name}"
        if check.detail:
            line += f" ({check.detail})"
        click.echo(line)
    if not all(c.ok for c in checks):
        raise SystemExit(1)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except TactiletexError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1) from None
    except click.exceptions.Abort:
        raise SystemExit(130) from None
    except click.exceptions.Exit as exc:
        raise SystemExit(exc.exit_code) from None
    except click.ClickException as exc:
        exc.show()
        raise SystemExit(exc.exit_code) from None


if __name__ == "__main__":
    main()
