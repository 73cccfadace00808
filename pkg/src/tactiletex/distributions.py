"""Distribution functions backing the statistical tests.

Student-t, F and chi-square CDFs reduce to regularized incomplete beta /
gamma functions (evaluated by scipy.special). The studentized range CDF
has no closed form and is integrated numerically here: the inner integral
is the range probability of k standard normals, the outer marginalizes
over the scaled sample standard deviation s = chi_df / sqrt(df). Both use
Gauss-Legendre panels sized for absolute error well below 1e-6.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import StatError

_GL_INNER_NODES = 128
_GL_OUTER_NODES = 64
_GL_OUTER_PANELS = 6
# standard normal beyond |z| = 9 contributes < 1e-18 to the inner integral
_Z_LIMIT = 9.0


def _check_df(df: float, name: str = "df") -> float:
    df = float(df)
    if not (df > 0.0) or not math.isfinite(df):
        raise StatError(f"{name} must be positive and finite, got {df}")
    return df


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def student_t_cdf(x: float, df: float) -> float:
    df = _check_df(df)
    if x == 0.0:
        return 0.5
    tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + x * x))
    return 1.0 - tail if x > 0.0 else tail


def student_t_sf(x: float, df: float) -> float:
    """Upper tail P(T > x), computed without cancellation for large x."""
    df = _check_df(df)
    if x == 0.0:
        return 0.5
    tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + x * x))
    return tail if x > 0.0 else 1.0 - tail


def f_cdf(x: float, df1: float, df2: float) -> float:
    df1 = _check_df(df1, "df1")
    df2 = _check_df(df2, "df2")
    if x <= 0.0:
        return 0.0
    return float(special.betainc(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2)))


def f_sf(x: float, df1: float, df2: float) -> float:
    df1 = _check_df(df1, "df1")
    df2 = _check_df(df2, "df2")
    if x <= 0.0:
        return 1.0
    return float(special.betainc(df2 / 2.0, df1 / 2.0, df2 / (df1 * x + df2)))


def chisq_cdf(x: float, df: float) -> float:
    df = _check_df(df)
    if x <= 0.0:
        return 0.0
    return float(special.gammainc(df / 2.0, x / 2.0))


def chisq_sf(x: float, df: float) -> float:
    df = _check_df(df)
    if x <= 0.0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


# ---------------------------------------------------------------------------
# Studentized range


def _phi(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _Phi(z: np.ndarray) -> np.ndarray:
    return 0.5 * special.erfc(-z / math.sqrt(2.0))


def _range_cdf(w: np.ndarray, k: int) -> np.ndarray:
    """P(range of k iid standard normals <= w), elementwise in w.

    k * integral of phi(z) * [Phi(z) - Phi(z - w)]^(k-1) dz over the real
    line, truncated to |z| <= 9 and evaluated with Gauss-Legendre nodes.
    """
    z, wz = np.polynomial.legendre.leggauss(_GL_INNER_NODES)
    z = z * _Z_LIMIT
    wz = wz * _Z_LIMIT
    w = np.asarray(w, dtype=np.float64)[..., None]
    inner = _Phi(z) - _Phi(z - w)
    integrand = _phi(z) * np.clip(inner, 0.0, 1.0) ** (k - 1)
    return np.clip(k * (integrand @ wz), 0.0, 1.0)


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """P(Q <= q) for the studentized range with k groups and df error dof."""
    if k < 2:
        raise StatError(f"studentized range needs k >= 2 groups, got {k}")
    df = _check_df(df)
    if q <= 0.0:
        return 0.0
    if math.isinf(df):
        return float(_range_cdf(np.array(q), k))

    # s = chi_df / sqrt(df) has density df^(df/2) / (Gamma(df/2) 2^(df/2-1))
    # * s^(df-1) exp(-df s^2 / 2); log-space avoids overflow at large df
    log_const = 0.5 * df * math.log(df) - math.lgamma(df / 2.0) - (df / 2.0 - 1.0) * math.log(2.0)

    mode = math.sqrt(max(df - 1.0, 0.0) / df) if df > 1.0 else 0.0
    spread = 12.0 / math.sqrt(2.0 * df)
    lo = max(mode - spread, 0.0)
    hi = mode + spread + 1.0

    nodes, weights = np.polynomial.legendre.leggauss(_GL_OUTER_NODES)
    edges = np.linspace(lo, hi, _GL_OUTER_PANELS + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        w = 0.5 * (b - a) * weights
        with np.errstate(divide="ignore"):
            log_dens = log_const + (df - 1.0) * np.log(s) - 0.5 * df * s * s
        dens = np.exp(np.where(s > 0.0, log_dens, -np.inf))
        total += float(np.sum(w * dens * _range_cdf(q * s, k)))
    return min(max(total, 0.0), 1.0)


def studentized_range_sf(q: float, k: int, df: float) -> float:
    return 1.0 - studentized_range_cdf(q, k, df)


def studentized_range_quantile(p: float, k: int, df: float, tol: float = 1e-8) -> float:
    """Inverse CDF by bisection; p in (0, 1)."""
    if not (0.0 < p < 1.0):
        raise StatError(f"quantile probability must be in (0, 1), got {p}")
    lo, hi = 0.0, 2.0
    while studentized_range_cdf(hi, k, df) < p:
        hi *= 2.0
        if hi > 1e6:
            raise StatError("studentized range quantile search diverged")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if studentized_range_cdf(mid, k, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
