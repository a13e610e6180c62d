"""Correlation and volatility estimation, matrix cleaning, and SPD roots.

The correlation estimator follows the construction used for the risk-parity
backtests: daily returns are summed into non-overlapping 5-business-day
blocks anchored to the first row, and an exponentially weighted covariance
is taken over those weekly sums with decay 1 - (1 - 1/span_days)^5 per
week (the weekly equivalent of a ``span_days``-day daily EMA).  Weighted
means are removed.  Entries for pairs with insufficient overlapping
history fall back to 0 (the shrinkage target).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, MatrixError, ParameterError

MIN_WEEKS = 26
EIG_FLOOR = 1e-10


@dataclass
class CorrEstimate:
    """Estimated correlation matrix plus bookkeeping."""

    matrix: np.ndarray
    effective_samples: float
    cleaning: str = "none"


@dataclass
class VolEstimate:
    """Per-instrument daily volatility, strictly positive."""

    sigma: np.ndarray


def weekly_sums(returns: np.ndarray) -> np.ndarray:
    """Non-overlapping 5-row sums anchored to the first row; NaN-aware.

    A week's value is NaN when any of its days is NaN (instrument
    inactive); a trailing partial week is dropped.
    """
    r = np.asarray(returns, dtype=float)
    n_weeks = r.shape[0] // 5
    if n_weeks == 0:
        raise DataError("fewer than 5 rows; cannot form weekly returns")
    trimmed = r[: n_weeks * 5]
    return trimmed.reshape(n_weeks, 5, *r.shape[1:]).sum(axis=1)


def estimate_correlation(
    returns: np.ndarray,
    span_days: int = 750,
    instruments: list[str] | None = None,
    min_weeks: int = MIN_WEEKS,
) -> CorrEstimate:
    """EMA-weighted correlation of weekly-resampled returns.

    ``returns`` is a (T, N) daily array (NaN marks inactive days).  Raises
    on fewer than ``min_weeks`` weeks of data or on a constant column.
    """
    if span_days < 1:
        raise ParameterError(f"span_days must be >= 1, got {span_days}")
    r = np.asarray(returns, dtype=float)
    if r.ndim != 2 or r.shape[1] < 2:
        raise DataError("need a (T, N) panel with at least 2 instruments")
    wk = weekly_sums(r)
    n_weeks, n = wk.shape
    if n_weeks < min_weeks:
        raise DataError(f"only {n_weeks} weeks of history; need at least {min_weeks}")
    names = instruments if instruments is not None else [f"col{j}" for j in range(n)]

    decay = 1.0 - (1.0 - 1.0 / span_days) ** 5
    w = (1.0 - decay) ** np.arange(n_weeks - 1, -1, -1, dtype=float)

    valid = np.isfinite(wk)
    x = np.where(valid, wk, 0.0)
    wv = w[:, None] * valid  # per-column weights where data exists

    col_w = wv.sum(axis=0)
    active = col_w > 0
    mean = np.zeros(n)
    mean[active] = (x * wv).sum(axis=0)[active] / col_w[active]
    xc = np.where(valid, wk - mean, 0.0)

    # weighted second moments; weeks where either column is invalid contribute 0
    cov = (xc * w[:, None]).T @ xc
    var = np.diag(cov).copy()

    msq = (x**2 * wv).sum(axis=0)
    for j in np.flatnonzero(active):
        # constant column: centered variance vanishes relative to the level
        if var[j] <= 1e-20 * max(msq[j], 1e-300):
            raise DataError(f"instrument {names[j]!r} is constant over the estimation window")

    # pairs need min_weeks of joint history, otherwise fall back to the
    # shrinkage target (0 off-diagonal)
    joint_weeks = valid.astype(float).T @ valid.astype(float)
    denom = np.sqrt(np.outer(var, var))
    usable = (joint_weeks >= min_weeks) & (denom > 0)
    corr = np.zeros((n, n))
    corr[usable] = cov[usable] / denom[usable]
    corr = np.clip(corr, -1.0, 1.0)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)

    eff = float(w.sum() ** 2 / (w**2).sum())
    return CorrEstimate(matrix=corr, effective_samples=eff, cleaning="none")


def marchenko_pastur_edge(q: float) -> float:
    """Upper bulk edge (1 + sqrt(q))^2 of the eigenvalue spectrum for
    aspect ratio q = N/T of pure-noise correlation matrices."""
    if q <= 0:
        raise ParameterError(f"q must be > 0, got {q}")
    return (1.0 + np.sqrt(q)) ** 2


def clean_correlation(
    est: CorrEstimate,
    method: str = "clip",
    q: float | None = None,
    shrink_intensity: float = 0.5,
) -> CorrEstimate:
    """Denoise a correlation matrix.

    ``clip``: eigenvalues below the Marchenko-Pastur edge (1+sqrt(q))^2 are
    replaced by their average (trace preserved), then the matrix is
    renormalized to unit diagonal.  ``shrink``: convex combination
    (1-a)*C + a*I with a = ``shrink_intensity``.  ``none``: pass-through.
    """
    c = np.asarray(est.matrix, dtype=float)
    if not np.allclose(c, c.T, atol=1e-10):
        raise MatrixError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(c), 1.0, atol=1e-10):
        raise MatrixError("correlation matrix diagonal must be 1")

    if method == "none":
        return CorrEstimate(c.copy(), est.effective_samples, "none")
    if method == "shrink":
        if not 0.0 <= shrink_intensity <= 1.0:
            raise ParameterError(f"shrink_intensity must be in [0, 1], got {shrink_intensity}")
        out = (1.0 - shrink_intensity) * c + shrink_intensity * np.eye(c.shape[0])
        return CorrEstimate(out, est.effective_samples, f"shrink({shrink_intensity})")
    if method != "clip":
        raise ParameterError(f"unknown cleaning method {method!r}")

    if q is None:
        raise ParameterError("method 'clip' needs the aspect ratio q = N/T")
    edge = marchenko_pastur_edge(q)
    w, v = np.linalg.eigh(c)
    noise = w < edge
    if noise.any():
        w = w.copy()
        w[noise] = max(w[noise].mean(), EIG_FLOOR)
    out = (v * w) @ v.T
    d = np.sqrt(np.diag(out))
    out = out / np.outer(d, d)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return CorrEstimate(out, est.effective_samples, f"clip(q={q:g})")


def inv_sqrt(matrix: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """Symmetric M with M @ C @ M == I, via Q diag(1/sqrt(w)) Q'.

    Raises MatrixError when an eigenvalue is at or below ``floor`` (clean
    the matrix first).
    """
    c = np.asarray(matrix, dtype=float)
    if not np.allclose(c, c.T, atol=1e-10):
        raise MatrixError("matrix is not symmetric")
    w, v = np.linalg.eigh(c)
    if w.min() <= floor:
        raise MatrixError(
            f"matrix is singular to working precision (min eigenvalue {w.min():.3e}); "
            "apply clean_correlation before inverting"
        )
    return (v / np.sqrt(w)) @ v.T


def correlation_to_csv(matrix: np.ndarray, names: list[str], path) -> None:
    """Square CSV with instrument names as header row and leading column."""
    import csv

    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["", *names])
        for name, row in zip(names, m):
            w.writerow([name, *(repr(float(x)) for x in row)])


def correlation_from_csv(path) -> tuple[np.ndarray, list[str]]:
    """Read a correlation matrix written by correlation_to_csv (or a bare
    headerless square of numbers)."""
    import csv

    with open(path, "r", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty correlation file")
    try:
        float(rows[0][0] if rows[0][0] else "x")
        has_header = False
    except ValueError:
        has_header = True
    if has_header:
        names = [c.strip() for c in rows[0][1:]]
        body = [r[1:] for r in rows[1:]]
    else:
        names = [f"col{j}" for j in range(len(rows[0]))]
        body = rows
    try:
        mat = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: unparseable matrix entry") from exc
    if mat.shape[0] != mat.shape[1] or (has_header and mat.shape[0] != len(names)):
        raise DataError(f"{path}: matrix is not square ({mat.shape})")
    return mat, names


def estimate_volatility(returns: np.ndarray, span_days: int = 40) -> VolEstimate:
    """Final-day EMA volatility of each column (see ewma_volatility for the path)."""
    from .signals import ewma_volatility

    if span_days < 1:
        raise ParameterError(f"span_days must be >= 1, got {span_days}")
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    if r.shape[0] < span_days:
        raise DataError(f"need at least {span_days} rows, got {r.shape[0]}")
    bad = ~(np.abs(r) > 0).any(axis=0)
    if bad.any():
        raise DataError(f"all-zero return column(s) at index {np.flatnonzero(bad).tolist()}")
    sig = ewma_volatility(r, 1.0 / span_days)
    return VolEstimate(sigma=sig[-1])
