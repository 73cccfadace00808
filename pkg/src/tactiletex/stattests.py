"""Statistical tests used by the evaluation pipeline.

All tests are implemented directly from their defining formulas on top of
the distribution kernels in distributions.py; nothing here shells out to a
stats library. Inputs are plain sequences or named Samples, outputs are
small result records that serialize cleanly to JSON.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .distributions import (
    chisq_sf,
    f_sf,
    normal_cdf,
    student_t_sf,
    studentized_range_sf,
)
from .errors import StatError

WILCOXON_EXACT_LIMIT = 15


@dataclass(frozen=True)
class Sample:
    """A named group of measurements."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size == 0:
            raise StatError(f"sample '{self.name}' is empty")
        if not np.all(np.isfinite(values)):
            raise StatError(f"sample '{self.name}' contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def variance(self) -> float:
        if self.n < 2:
            raise StatError(f"sample '{self.name}' needs at least 2 values")
        return float(np.var(self.values, ddof=1))


def _as_sample(x, name: str) -> Sample:
    if isinstance(x, Sample):
        return x
    return Sample(name, np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_value: float
    mean_a: float
    mean_b: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AnovaResult:
    statistic: float
    df_between: float
    df_within: float
    p_value: float
    group_names: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["group_names"] = list(self.group_names)
        return d


@dataclass(frozen=True)
class GamesHowellEntry:
    group_a: str
    group_b: str
    mean_diff: float
    statistic: float
    df: float
    p_value: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    df: int
    p_value: float
    n_subjects: int
    n_conditions: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    w_plus: float
    w_minus: float
    n: int
    p_value: float
    method: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpearmanResult:
    statistic: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def rank_average(values) -> np.ndarray:
    """Ranks starting at 1; tied values share the average of their ranks."""
    x = np.asarray(values, dtype=np.float64).ravel()
    order = np.argsort(x, kind="stable")
    sx = x[order]
    boundary = np.r_[True, sx[1:] != sx[:-1]]
    group = np.cumsum(boundary) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    starts = ends - counts
    averaged = (starts + ends + 1) / 2.0
    ranks = np.empty_like(sx)
    ranks[order] = averaged[group]
    return ranks


def welch_t(a, b) -> TTestResult:
    """Two-sided Welch t test (unequal variances)."""
    sa = _as_sample(a, "a")
    sb = _as_sample(b, "b")
    if sa.n < 2 or sb.n < 2:
        raise StatError("welch_t needs at least 2 values per group")
    va, vb = sa.variance, sb.variance
    qa, qb = va / sa.n, vb / sb.n
    se2 = qa + qb
    if se2 == 0.0:
        # both groups constant: identical means carry no evidence either
        # way, differing means are incompatible with zero variance
        if sa.mean == sb.mean:
            return TTestResult(0.0, float(sa.n + sb.n - 2), 1.0, sa.mean, sb.mean)
        raise StatError("welch_t: both groups have zero variance but different means")
    t = (sa.mean - sb.mean) / math.sqrt(se2)
    df = se2**2 / (qa**2 / (sa.n - 1) + qb**2 / (sb.n - 1))
    p = 2.0 * student_t_sf(abs(t), df)
    return TTestResult(float(t), float(df), min(float(p), 1.0), sa.mean, sb.mean)


def _named_groups(groups: Sequence) -> list[Sample]:
    out = []
    for i, g in enumerate(groups):
        out.append(_as_sample(g, f"group{i + 1}"))
    names = [s.name for s in out]
    if len(set(names)) != len(names):
        raise StatError("group names must be unique")
    return out


def welch_anova(groups: Sequence) -> AnovaResult:
    """Welch's heteroscedastic one-way ANOVA (F* statistic)."""
    samples = _named_groups(groups)
    k = len(samples)
    if k < 2:
        raise StatError("welch_anova needs at least 2 groups")
    for s in samples:
        if s.n < 2:
            raise StatError(f"group '{s.name}' needs at least 2 values")
        if s.variance == 0.0:
            raise StatError(f"group '{s.name}' has zero variance")
    n = np.array([s.n for s in samples], dtype=np.float64)
    m = np.array([s.mean for s in samples])
    v = np.array([s.variance for s in samples])
    w = n / v
    wsum = float(np.sum(w))
    grand = float(np.sum(w * m) / wsum)
    a = float(np.sum(w * (m - grand) ** 2)) / (k - 1)
    frac = float(np.sum((1.0 - w / wsum) ** 2 / (n - 1.0)))
    b = 1.0 + 2.0 * (k - 2) / (k * k - 1.0) * frac
    f_star = a / b
    df1 = float(k - 1)
    df2 = (k * k - 1.0) / (3.0 * frac)
    p = f_sf(f_star, df1, df2)
    return AnovaResult(float(f_star), df1, float(df2), float(p), tuple(s.name for s in samples))


def games_howell(groups: Sequence) -> list[GamesHowellEntry]:
    """Pairwise post-hoc comparisons with unequal variances.

    The pairwise statistic is the Welch t; its p-value comes from the
    studentized range distribution with k groups (q = t * sqrt(2)).
    """
    samples = _named_groups(groups)
    k = len(samples)
    if k < 2:
        raise StatError("games_howell needs at least 2 groups")
    for s in samples:
        if s.n < 2:
            raise StatError(f"group '{s.name}' needs at least 2 values")
        if s.variance == 0.0:
            raise StatError(f"group '{s.name}' has zero variance")
    entries = []
    for i in range(k):
        for j in range(i + 1, k):
            si, sj = samples[i], samples[j]
            qi, qj = si.variance / si.n, sj.variance / sj.n
            se2 = qi + qj
            diff = si.mean - sj.mean
            t = abs(diff) / math.sqrt(se2)
            df = se2**2 / (qi**2 / (si.n - 1) + qj**2 / (sj.n - 1))
            p = studentized_range_sf(t * math.sqrt(2.0), k, df)
            entries.append(
                GamesHowellEntry(si.name, sj.name, float(diff), float(t), float(df), float(p))
            )
    return entries


def friedman(matrix) -> FriedmanResult:
    """Friedman rank test on an (n subjects) x (k conditions) matrix."""
    data = np.asarray(matrix, dtype=np.float64)
    if data.ndim != 2:
        raise StatError("friedman expects a 2-D matrix of measurements")
    n, k = data.shape
    if k < 3:
        raise StatError(f"friedman needs at least 3 conditions, got {k}")
    if n < 2:
        raise StatError(f"friedman needs at least 2 subjects, got {n}")
    ranks = np.vstack([rank_average(row) for row in data])

    ties = 0.0
    for row in data:
        _, counts = np.unique(row, return_counts=True)
        ties += float(np.sum(counts**3 - counts))
    c = 1.0 - ties / (n * k * (k * k - 1.0))
    if c <= 0.0:
        raise StatError("friedman: all observations within every subject are tied")

    column_sums = np.sum(ranks, axis=0)
    ssbn = float(np.sum(column_sums**2))
    chi2 = (12.0 / (k * n * (k + 1.0)) * ssbn - 3.0 * n * (k + 1.0)) / c
    df = k - 1
    return FriedmanResult(float(chi2), df, chisq_sf(chi2, df), n, k)


def wilcoxon_signed_rank(a, b=None) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    With b omitted, a is taken as the paired differences. Zero differences
    are dropped. Exact p by full sign enumeration up to
    WILCOXON_EXACT_LIMIT effective pairs, normal approximation with tie
    correction and continuity correction beyond that.
    """
    x = np.asarray(a, dtype=np.float64).ravel()
    if b is not None:
        y = np.asarray(b, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise StatError("wilcoxon_signed_rank: paired samples differ in length")
        d = x - y
    else:
        d = x
    if not np.all(np.isfinite(d)):
        raise StatError("wilcoxon_signed_rank: non-finite differences")
    d = d[d != 0.0]
    n = int(d.size)
    if n == 0:
        raise StatError("wilcoxon_signed_rank: all differences are zero")

    ranks = rank_average(np.abs(d))
    w_plus = float(np.sum(ranks[d > 0.0]))
    w_minus = float(np.sum(ranks[d < 0.0]))
    w = min(w_plus, w_minus)

    if n <= WILCOXON_EXACT_LIMIT:
        signs = (np.arange(2**n, dtype=np.int64)[:, None] >> np.arange(n)) & 1
        dist = signs.astype(np.float64) @ ranks
        p_le = float(np.mean(dist <= w_plus + 1e-9))
        p_ge = float(np.mean(dist >= w_plus - 1e-9))
        p = min(1.0, 2.0 * min(p_le, p_ge))
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, counts = np.unique(ranks, return_counts=True)
        var -= float(np.sum(counts**3 - counts)) / 48.0
        if var <= 0.0:
            raise StatError("wilcoxon_signed_rank: zero variance rank distribution")
        shift = 0.5 * float(np.sign(w - mean))
        z = (w - mean - shift) / math.sqrt(var)
        p = min(1.0, 2.0 * normal_cdf(-abs(z)))
        method = "approx"
    return WilcoxonResult(float(w), w_plus, w_minus, n, float(p), method)


def holm_correct(p_values: Sequence[float]) -> list[float]:
    """Holm step-down adjusted p-values, returned in input order."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return []
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise StatError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    adjusted = np.minimum((m - np.arange(m)) * p[order], 1.0)
    adjusted = np.maximum.accumulate(adjusted)
    out = np.empty(m)
    out[order] = adjusted
    return [float(v) for v in out]


def spearman(a, b) -> SpearmanResult:
    """Spearman rank correlation with a t-distribution p-value."""
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise StatError("spearman: samples differ in length")
    n = int(x.size)
    if n < 3:
        raise StatError(f"spearman needs at least 3 pairs, got {n}")
    rx = rank_average(x)
    ry = rank_average(y)
    rx -= np.mean(rx)
    ry -= np.mean(ry)
    denom = math.sqrt(float(np.sum(rx**2) * np.sum(ry**2)))
    if denom == 0.0:
        raise StatError("spearman: constant input has no rank ordering")
    rho = float(np.sum(rx * ry) / denom)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = min(1.0, 2.0 * student_t_sf(abs(t), n - 2))
    return SpearmanResult(rho, float(p), n)


# ---------------------------------------------------------------------------
# CSV ingestion


def read_long_csv(path, group_col: str = "group", value_col: str = "value") -> list[Sample]:
    """One row per measurement; returns Samples in first-seen group order."""
    path = Path(path)
    groups: dict[str, list[float]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or group_col not in reader.fieldnames:
            raise StatError(f"{path}: missing column '{group_col}'")
        if value_col not in reader.fieldnames:
            raise StatError(f"{path}: missing column '{value_col}'")
        for i, row in enumerate(reader, start=2):
            try:
                value = float(row[value_col])
            except (TypeError, ValueError):
                raise StatError(f"{path}:{i}: bad value {row[value_col]!r}") from None
            groups.setdefault(row[group_col], []).append(value)
    if not groups:
        raise StatError(f"{path}: no data rows")
    return [Sample(name, np.array(vals)) for name, vals in groups.items()]


def read_wide_csv(path) -> tuple[list[str], np.ndarray]:
    """Header row of condition names, one row per subject."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StatError(f"{path}: empty file") from None
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise StatError(f"{path}:{i}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise StatError(f"{path}:{i}: non-numeric entry") from None
    if not rows:
        raise StatError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def read_ratings_csv(
    path,
    subject_col: str = "subject",
    condition_col: str = "condition",
    value_col: str = "value",
) -> tuple[list[str], np.ndarray]:
    """Pivot long-form ratings to a complete subjects x conditions matrix."""
    path = Path(path)
    cells: dict[tuple[str, str], float] = {}
    subjects: list[str] = []
    conditions: list[str] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in (subject_col, condition_col, value_col) if reader.fieldnames is None or c not in reader.fieldnames]
        if missing:
            raise StatError(f"{path}: missing column(s) {', '.join(missing)}")
        for i, row in enumerate(reader, start=2):
            key = (row[subject_col], row[condition_col])
            if key in cells:
                raise StatError(f"{path}:{i}: duplicate rating for {key[0]}/{key[1]}")
            try:
                cells[key] = float(row[value_col])
            except (TypeError, ValueError):
                raise StatError(f"{path}:{i}: bad value {row[value_col]!r}") from None
            if key[0] not in subjects:
                subjects.append(key[0])
            if key[1] not in conditions:
                conditions.append(key[1])
    if not cells:
        raise StatError(f"{path}: no data rows")
    matrix = np.empty((len(subjects), len(conditions)), dtype=np.float64)
    for si, s in enumerate(subjects):
        for ci, c in enumerate(conditions):
            if (s, c) not in cells:
                raise StatError(f"{path}: subject '{s}' has no rating for condition '{c}'")
            matrix[si, ci] = cells[(s, c)]
    return conditions, matrix
