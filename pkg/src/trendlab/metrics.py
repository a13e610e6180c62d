"""Backtest statistics: Sharpe ratios, holding periods, correlations, bootstrap CIs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError
from .portfolio import PortfolioSeries
from .rng import BOOTSTRAP, derive_rng
from .theory import TRADING_DAYS


def sharpe(returns: np.ndarray, annualization: int = TRADING_DAYS) -> float:
    """Annualized mean/std with a zero risk-free rate."""
    r = np.asarray(returns, dtype=float).ravel()
    if r.size < 2:
        raise DataError(f"need at least 2 observations, got {r.size}")
    sd = r.std(ddof=1)
    if sd == 0.0:
        raise DataError("zero-variance return series has no Sharpe ratio")
    return float(r.mean() / sd * math.sqrt(annualization))


def holding_period(series: PortfolioSeries) -> float:
    """Average position lifetime in days: 2 * mean gross exposure / mean turnover.

    Computed on the post-warm-up window of the realized (smoothed,
    vol-targeted) weights; a frozen book returns +inf.
    """
    w = series.weights[series.valid]
    if w.shape[0] < 2:
        raise DataError("need at least 2 valid days of weights")
    gross_exposure = np.abs(w).sum(axis=1).mean()
    turn = np.abs(np.diff(w, axis=0)).sum(axis=1).mean()
    if turn == 0.0:
        return math.inf
    return float(2.0 * gross_exposure / turn)


def strategy_correlation(runs: list[PortfolioSeries], use_net: bool = False) -> np.ndarray:
    """Pearson correlation matrix of daily returns across runs.

    Runs must share their date index; the correlation is computed on the
    intersection of their valid windows.
    """
    if len(runs) < 2:
        raise ParameterError("need at least 2 runs")
    first = runs[0]
    for run in runs[1:]:
        if len(run.dates) != len(first.dates) or not (run.dates == first.dates).all():
            raise DataError("runs are not aligned on the same dates")
    common = np.logical_and.reduce([run.valid for run in runs])
    if common.sum() < 2:
        raise DataError("no overlapping valid window across runs")
    mat = np.vstack(
        [(run.returns_net if use_net else run.returns_gross)[common] for run in runs]
    )
    return np.corrcoef(mat)


def stationary_block_indices(n: int, block_len: int, rng: np.random.Generator) -> np.ndarray:
    """One stationary-bootstrap resample of 0..n-1 (geometric blocks, wrap-around)."""
    starts = rng.integers(0, n, size=n)
    geoms = rng.geometric(1.0 / block_len, size=n)
    idx = np.empty(n, dtype=int)
    pos = 0
    k = 0
    while pos < n:
        ln = min(int(geoms[k]), n - pos)
        idx[pos : pos + ln] = (starts[k] + np.arange(ln)) % n
        pos += ln
        k += 1
        if k == n:  # pathological draw; excessively long blocks
            geoms = rng.geometric(1.0 / block_len, size=n)
            starts = rng.integers(0, n, size=n)
            k = 0
    return idx


def bootstrap_sharpe_ci(
    returns: np.ndarray,
    block_len: int = 60,
    n_resamples: int = 2000,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Stationary-block-bootstrap percentile interval for the annualized Sharpe."""
    if n_resamples < 1:
        raise ParameterError(f"n_resamples must be >= 1, got {n_resamples}")
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    r = np.asarray(returns, dtype=float).ravel()
    if r.size < 10 * block_len:
        raise DataError(f"series of length {r.size} is too short for block length {block_len}")
    stats = np.empty(n_resamples)
    for i in range(n_resamples):
        rng = derive_rng(seed, BOOTSTRAP, i)
        x = r[stationary_block_indices(r.size, block_len, rng)]
        sd = x.std(ddof=1)
        stats[i] = np.nan if sd == 0 else x.mean() / sd * math.sqrt(TRADING_DAYS)
    stats = stats[np.isfinite(stats)]
    if stats.size == 0:
        raise DataError("all bootstrap resamples were degenerate")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


@dataclass
class BacktestReport:
    sharpe_gross: float
    sharpe_net: float
    holding_period_days: float
    vol_realized: float
    n_days: int
    bootstrap_ci: tuple[float, float] | None = None

    def to_row(self) -> dict:
        out = {
            "sharpe_gross": self.sharpe_gross,
            "sharpe_net": self.sharpe_net,
            "holding_period_days": self.holding_period_days,
            "vol_realized": self.vol_realized,
            "n_days": self.n_days,
        }
        if self.bootstrap_ci is not None:
            out["sharpe_ci_low"], out["sharpe_ci_high"] = self.bootstrap_ci
        return out


def report(
    series: PortfolioSeries,
    with_ci: bool = True,
    block_len: int = 60,
    n_resamples: int = 2000,
    seed: int = 0,
) -> BacktestReport:
    """Summarize one run over its valid window."""
    mask = series.valid
    if mask.sum() < 2:
        raise DataError("run has no valid window to report on")
    g = series.returns_gross[mask]
    n = series.returns_net[mask]
    ci = None
    if with_ci:
        ci = bootstrap_sharpe_ci(g, block_len=block_len, n_resamples=n_resamples, seed=seed)
    return BacktestReport(
        sharpe_gross=sharpe(g),
        sharpe_net=sharpe(n),
        holding_period_days=holding_period(series),
        vol_realized=float(n.std(ddof=1) * math.sqrt(TRADING_DAYS)),
        n_days=int(mask.sum()),
        bootstrap_ci=ci,
    )
