"""Boxplot rendering for evaluation reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "tactiletex"

import matplotlib.pyplot as plt  # noqa: E402

from .errors import DatasetError

_METRIC_LABELS = {"rms": "surface roughness (RMS)", "mse": "MSE vs groundtruth", "ssim": "SSIM vs groundtruth"}


def _series(report: dict, metric: str) -> dict[str, list[float]]:
    entries = report["entries"]
    if report["kind"] == "formative":
        if metric == "rms":
            return {
                "groundtruth": [e["rms_groundtruth"] for e in entries],
                report["generator"]: [e["rms_candidate"] for e in entries],
            }
        return {report["generator"]: [e[metric] for e in entries]}
    if report["kind"] == "technical":
        out = {}
        if metric == "rms":
            out["groundtruth"] = [e["rms_groundtruth"] for e in entries]
        for label in sorted(report["candidates"]):
            out[label] = [e["candidates"][label][metric] for e in entries]
        return out
    raise DatasetError(f"cannot plot report of kind {report.get('kind')!r}")


def plot_report(report: dict, path, metric: str = "rms") -> Path:
    """Render one metric of an evaluation report as an SVG boxplot."""
    if metric not in _METRIC_LABELS:
        raise DatasetError(f"unknown metric {metric!r}, expected one of {sorted(_METRIC_LABELS)}")
    series = _series(report, metric)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(series), 3.6))
    ax.boxplot(list(series.values()), tick_labels=list(series.keys()))
    ax.set_ylabel(_METRIC_LABELS[metric])
    ax.set_title(f"{report['kind']} evaluation, n={report['n_entries']}")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
