from __future__ import annotations

import numpy as np
import pytest

from tactiletex.dataset import generate_synthetic_corpus
from tactiletex.heightfield import Heightfield
from tactiletex.mesh import make_tile

try:
    from hypothesis import settings

    settings.register_profile("suite", deadline=None, max_examples=25)
    settings.load_profile("suite")
except ImportError:
    pass


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """3 categories x 3 entries at 64x64; shared by dataset/evaluate/cli tests."""
    root = tmp_path_factory.mktemp("corpus")
    return generate_synthetic_corpus(
        root, entries_per_category=3, resolution=(64, 64), seed=7
    )


@pytest.fixture(scope="session")
def small_tile():
    return make_tile((50.0, 50.0, 10.0), target_faces=500)


@pytest.fixture()
def waves_64():
    rng = np.random.default_rng(3)
    y, x = np.mgrid[0:64, 0:64] / 64.0
    values = 0.5 + 0.3 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
    values += 0.1 * np.sin(4 * np.pi * (x + y))
    lo, hi = values.min(), values.max()
    return Heightfield((values - lo) / (hi - lo))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance test at the end of the run."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(report, "when", "") == "call":
                rows.append((nodeid.split("::")[-1], outcome == "passed"))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance summary")
    for name, ok in sorted(rows):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
