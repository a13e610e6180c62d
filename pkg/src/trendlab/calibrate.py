"""Fitting the theoretical Sharpe curves to empirical backtests.

Two fits are provided: the Sharpe-vs-smoothing curve (recovering the trend
relaxation rate lam and strength beta0) and the Sharpe-vs-universe-size
curve (recovering the mean squared correlation rho^2).  Both are plain
least squares, weighted by the supplied standard errors when available;
the Sharpe fit is multi-started from a log grid over lam to avoid local
minima.  Confidence intervals are bootstrap percentiles only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import DataError, FitError, ParameterError
from .metrics import stationary_block_indices
from .panel import ReturnsPanel
from .rng import BOOTSTRAP, SUBUNIVERSE, derive_rng
from .theory import TRADING_DAYS, scaling_factor, sharpe_curve

LAM_GRID = np.exp(np.linspace(math.log(1e-3), math.log(0.1), 8))
BETA0_GRID = np.array([0.01, 0.05, 0.1, 0.2, 0.5])


@dataclass
class SharpeCurve:
    """Empirical annualized Sharpe against the indicator smoothing eta."""

    etas: np.ndarray
    sharpes: np.ndarray
    std_errors: np.ndarray | None = None
    strategy_tag: str = ""

    def __post_init__(self):
        self.etas = np.asarray(self.etas, dtype=float)
        self.sharpes = np.asarray(self.sharpes, dtype=float)
        order = np.argsort(self.etas)
        self.etas = self.etas[order]
        self.sharpes = self.sharpes[order]
        if self.std_errors is not None:
            self.std_errors = np.asarray(self.std_errors, dtype=float)[order]
        if np.any(self.etas <= 0) or np.any(self.etas >= 1):
            raise ParameterError("etas must lie in (0, 1)")
        if np.unique(self.etas).size != self.etas.size:
            raise ParameterError("etas must be distinct")


@dataclass
class FitResult:
    params: dict
    r_squared: float
    ci95: dict | None
    residuals: np.ndarray
    fitted: np.ndarray
    extras: dict = field(default_factory=dict)


def _weights(std_errors, n):
    if std_errors is None:
        return np.ones(n)
    se = np.asarray(std_errors, dtype=float)
    if np.any(se <= 0):
        raise ParameterError("std errors must be strictly positive")
    return 1.0 / se**2


def _weighted_r2(y, fitted, w):
    ybar = np.sum(w * y) / np.sum(w)
    ss_res = np.sum(w * (y - fitted) ** 2)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")


def _percentile_ci(samples, point, level=0.95):
    # percentile interval, widened to always contain the point estimate
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(samples, [alpha, 1.0 - alpha])
    return (float(min(lo, point)), float(max(hi, point)))


# ---------------------------------------------------------------------------
# Sharpe-vs-eta fit
# ---------------------------------------------------------------------------


def _sharpe_objective(curve: SharpeCurve, theta: float):
    w = _weights(curve.std_errors, curve.etas.size)

    def obj(x):
        lam, beta0 = np.exp(x)
        if lam > 1.0:
            return 1e12
        model = sharpe_curve(curve.etas, lam, beta0, theta, annualized=True)
        return float(np.sum(w * (model - curve.sharpes) ** 2))

    return obj, w


def _fit_point(curve: SharpeCurve, theta: float, x0=None):
    obj, w = _sharpe_objective(curve, theta)
    grid = []
    for lam in LAM_GRID:
        for b0 in BETA0_GRID:
            x = np.log([lam, b0])
            grid.append((obj(x), lam, b0))
    grid.sort(key=lambda g: g[0])
    starts = [np.log([lam, b0]) for _, lam, b0 in grid[:6]]
    if x0 is not None:
        starts = [np.asarray(x0)] + starts
    best = None
    for s in starts:
        res = minimize(obj, s, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
        if x0 is not None:
            break  # bootstrap refits reuse the point solution only
    if best is None or not np.isfinite(best.fun):
        raise FitError("Sharpe-curve fit did not converge from any start", grid_scan=grid)
    lam, beta0 = np.exp(best.x)
    return lam, beta0, best.fun, grid, w


def fit_sharpe_curve(
    curve: SharpeCurve,
    theta: float = 0.0,
    daily_returns: np.ndarray | None = None,
    n_boot: int = 500,
    block_len: int = 60,
    seed: int = 0,
    sharpe_scale: float = 1.0,
) -> FitResult:
    """Least-squares fit of the annualized theoretical curve over (lam, beta0).

    ``daily_returns`` (T x n_points, columns aligned with the curve's etas)
    enables the bootstrap: time indices are block-resampled jointly across
    columns, the per-column Sharpe recomputed, and the curve refit.  Raises
    FitError with the grid scan attached when no start converges.

    ``sharpe_scale`` divides the resampled Sharpe ratios before refitting.
    Pass the diversification factor when ``curve`` holds a multi-asset
    Sharpe curve normalized down to per-asset scale: Sharpe ratios are
    invariant to rescaling the daily returns, so the normalization must be
    applied to the resampled statistics, not to the matrix.
    """
    if curve.etas.size < 4:
        raise ParameterError(f"need at least 4 curve points, got {curve.etas.size}")
    if curve.etas.max() / curve.etas.min() < 5.0:
        raise ParameterError("curve must span at least a factor 5 in eta")

    lam, beta0, fun, grid, w = _fit_point(curve, theta)
    if fun > min(g[0] for g in grid) + 1e-12 and fun > 1e12:
        raise FitError("objective above every grid point", grid_scan=grid)
    fitted = sharpe_curve(curve.etas, lam, beta0, theta, annualized=True)
    residuals = curve.sharpes - fitted
    r2 = _weighted_r2(curve.sharpes, fitted, w)

    ci = None
    boot = None
    if daily_returns is not None:
        daily = np.asarray(daily_returns, dtype=float)
        if daily.ndim != 2 or daily.shape[1] != curve.etas.size:
            raise ParameterError(
                f"daily_returns must be (T, {curve.etas.size}), got {daily.shape}"
            )
        t_len = daily.shape[0]
        x0 = np.log([lam, beta0])
        boot = np.empty((n_boot, 2))
        ann = math.sqrt(TRADING_DAYS)
        for i in range(n_boot):
            rng = derive_rng(seed, BOOTSTRAP, i)
            idx = stationary_block_indices(t_len, block_len, rng)
            sample = daily[idx]
            sh = sample.mean(axis=0) / sample.std(axis=0, ddof=1) * ann / sharpe_scale
            bcurve = SharpeCurve(curve.etas, sh, curve.std_errors, curve.strategy_tag)
            bl, bb, _, _, _ = _fit_point(bcurve, theta, x0=x0)
            boot[i] = (bl, bb)
        ci = {
            "lam": _percentile_ci(boot[:, 0], lam),
            "beta0": _percentile_ci(boot[:, 1], beta0),
        }

    return FitResult(
        params={"lam": float(lam), "beta0": float(beta0)},
        r_squared=float(r2),
        ci95=ci,
        residuals=residuals,
        fitted=fitted,
        extras={"objective": fun, "grid_scan": grid, "theta": theta,
                "bootstrap_samples": boot, "tag": curve.strategy_tag},
    )


# ---------------------------------------------------------------------------
# Sharpe-vs-universe-size fit
# ---------------------------------------------------------------------------


def fit_scaling_curve(
    points,
    s_ref_eta: float | None = None,
    n_trials: int | None = None,
    n_boot: int = 1000,
    seed: int = 0,
) -> FitResult:
    """Fit S1*sqrt(N/(1+(N-1)*rho^2)) to (N, mean Sharpe, std) observations.

    Also fits the plain S1*sqrt(N) law for comparison; its residual sum is
    reported in ``extras``.  When ``n_trials`` is given (the number of
    random sub-universes behind each mean), a parametric bootstrap on the
    point means yields percentile CIs.
    """
    pts = [(int(n), float(mu), float(sd)) for n, mu, sd in points]
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts])
    sds = np.array([p[2] for p in pts])
    if np.unique(ns).size < 3 or 1 not in ns:
        raise ParameterError("need at least 3 distinct universe sizes including N=1")
    se = None
    if n_trials is not None and np.all(sds > 0):
        se = sds / math.sqrt(n_trials)
    w = _weights(se, ns.size)

    def model(params, n):
        s1, rho2 = params
        return s1 * np.sqrt(n / (1.0 + (n - 1.0) * rho2))

    def resid(params):
        return np.sqrt(w) * (model(params, ns) - ys)

    best = None
    s1_guess = ys[ns == 1].mean()
    if not np.isfinite(s1_guess) or s1_guess == 0:
        s1_guess = ys.mean()
    for rho2_0 in (0.01, 0.05, 0.2):
        res = least_squares(resid, x0=[s1_guess, rho2_0], bounds=([-np.inf, 0.0], [np.inf, 1.0]))
        if best is None or res.cost < best.cost:
            best = res
    s1, rho2 = best.x
    fitted = model(best.x, ns)
    residuals = ys - fitted
    r2 = _weighted_r2(ys, fitted, w)

    # plain square-root law, closed-form weighted LS
    s1_sqrt = np.sum(w * ys * np.sqrt(ns)) / np.sum(w * ns)
    fitted_sqrt = s1_sqrt * np.sqrt(ns)
    ss_sqrt = float(np.sum(w * (ys - fitted_sqrt) ** 2))
    ss_main = float(np.sum(w * residuals**2))

    ci = None
    boot = None
    if se is not None:
        boot = np.empty((n_boot, 2))
        for i in range(n_boot):
            rng = derive_rng(seed, BOOTSTRAP, i)
            y_star = ys + rng.standard_normal(ys.size) * se
            res = least_squares(
                resid_factory(w, ns, y_star), x0=[s1, rho2], bounds=([-np.inf, 0.0], [np.inf, 1.0])
            )
            boot[i] = res.x
        ci = {
            "s1": _percentile_ci(boot[:, 0], s1),
            "rho_sq": _percentile_ci(boot[:, 1], rho2),
        }

    return FitResult(
        params={"s1": float(s1), "rho_sq": float(rho2)},
        r_squared=float(r2),
        ci95=ci,
        residuals=residuals,
        fitted=fitted,
        extras={
            "ss_res": ss_main,
            "sqrt_law_s1": float(s1_sqrt),
            "sqrt_law_ss_res": ss_sqrt,
            "s_ref_eta": s_ref_eta,
            "bootstrap_samples": boot,
        },
    )


def resid_factory(w, ns, ys):
    def resid(params):
        s1, rho2 = params
        return np.sqrt(w) * (s1 * np.sqrt(ns / (1.0 + (ns - 1.0) * rho2)) - ys)

    return resid


def extrapolate_scaling(fit: FitResult, n: float) -> float:
    """Predicted Sharpe at universe size n (n = inf supported)."""
    s1, rho2 = fit.params["s1"], fit.params["rho_sq"]
    if math.isinf(n):
        return s1 / math.sqrt(rho2)
    return s1 * scaling_factor(int(n), rho2)


# ---------------------------------------------------------------------------
# sub-universe sampling
# ---------------------------------------------------------------------------


def curve_from_runs(etas, runs, tag: str = "") -> tuple[SharpeCurve, np.ndarray]:
    """Annualized Sharpe curve plus the aligned daily gross-return matrix.

    Sharpe ratios are computed on the intersection of the runs' valid
    windows so that the bootstrap can resample all columns jointly.  The
    daily matrix columns follow the curve's (eta-ascending) order.
    """
    etas = np.asarray(etas, dtype=float)
    if len(runs) != etas.size:
        raise ParameterError("one run per eta required")
    order = np.argsort(etas)
    etas = etas[order]
    runs = [runs[i] for i in order]
    common = np.logical_and.reduce([r.valid for r in runs])
    if common.sum() < 100:
        raise DataError("runs share fewer than 100 valid days")
    daily = np.column_stack([r.returns_gross[common] for r in runs])
    ann = math.sqrt(TRADING_DAYS)
    sh = daily.mean(axis=0) / daily.std(axis=0, ddof=1) * ann
    return SharpeCurve(etas, sh, strategy_tag=tag), daily


def subuniverse_sampler(
    panel: ReturnsPanel, sizes, trials: int, seed: int = 0
) -> list[tuple[int, int, ReturnsPanel]]:
    """(size, trial, sub-panel) draws, uniform without replacement.

    Each (size, trial) pair gets its own derived stream, so any subset of
    the experiments can be reproduced independently.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    out = []
    for size in sizes:
        size = int(size)
        if not 1 <= size <= panel.n_assets:
            raise ParameterError(f"sub-universe size {size} not in [1, {panel.n_assets}]")
        for trial in range(trials):
            rng = derive_rng(seed, SUBUNIVERSE, size, trial)
            idx = np.sort(rng.choice(panel.n_assets, size=size, replace=False))
            out.append((size, trial, panel.subset(idx.tolist())))
    return out
