"""Signal-to-portfolio pipeline: rotation, smoothing, and volatility targeting.

Daily positions are built from an N-vector of trend signals s_t in three
steps (info through day t sets the weights held over day t+1):

    raw_t   = Sigma_t^-1 K_t s_t          K = C^-1/2 (arp), I (naive), C^-1 (markowitz)
    hat_t   = (1-rho) hat_{t-1} + rho raw_t
    w_{t+1} = hat_t / sqrt(hat_t' Sigma_t C_t Sigma_t hat_t) * target_vol/sqrt(255)

Sigma is a diagonal matrix of 40-day EMA volatilities and C an
exponentially weighted correlation of weekly returns, re-estimated at the
end of every 5-business-day block and cleaned before inversion.  The
smoothing acts on the *unnormalized* vector, exactly as the recursion is
written; the unit-risk normalization is applied afterwards, so the
smoothed vector's scale never feeds back into the positions.

Under the binary rule the sign of the signal is taken before the rotation.
With one asset the normalization pins |w|*sigma to the vol target, so the
pipeline degenerates to a sign strategy regardless of the rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DataError, ParameterError
from .matrices import CorrEstimate, VolEstimate, clean_correlation, inv_sqrt
from .panel import ReturnsPanel, panel_from_returns
from .signals import (
    EMA,
    MACD3,
    NONLINEAR_CUBIC,
    IndicatorSpec,
    ema_series,
    ewma_volatility,
    macd3,
    nonlinear_cubic,
    warmup_length,
)
from .theory import TRADING_DAYS

ARP = "arp"
NAIVE = "naive"
MARKOWITZ = "markowitz"
LINEAR = "linear"
BINARY = "binary"


@dataclass
class PortfolioConfig:
    scheme: str = ARP
    rule: str = LINEAR
    smoothing_rho: float = 1.0 / 20.0
    target_vol: float = 0.10
    cost_bps: float = 0.0

    def __post_init__(self):
        if self.scheme not in (ARP, NAIVE, MARKOWITZ):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.rule not in (LINEAR, BINARY):
            raise ParameterError(f"unknown rule {self.rule!r}")
        if not 0.0 < self.smoothing_rho <= 1.0:
            raise ParameterError(f"smoothing_rho must be in (0, 1], got {self.smoothing_rho}")
        if self.target_vol <= 0.0:
            raise ParameterError(f"target_vol must be > 0, got {self.target_vol}")
        if self.cost_bps < 0.0:
            raise ParameterError(f"cost_bps must be >= 0, got {self.cost_bps}")

    @property
    def daily_scale(self) -> float:
        return self.target_vol / math.sqrt(TRADING_DAYS)


def rotation_matrix(corr: np.ndarray, scheme: str) -> np.ndarray:
    """The K applied to the signal vector for a given scheme."""
    n = corr.shape[0]
    if scheme == NAIVE:
        return np.eye(n)
    m = inv_sqrt(corr)
    if scheme == ARP:
        return m
    return m @ m  # markowitz: C^-1


@dataclass
class PortfolioState:
    smoothed: np.ndarray  # the running hat vector

    @classmethod
    def initial(cls, n: int) -> "PortfolioState":
        return cls(smoothed=np.zeros(n))


def step(
    state: PortfolioState,
    signal: np.ndarray,
    corr: CorrEstimate | np.ndarray,
    vol: VolEstimate | np.ndarray,
    cfg: PortfolioConfig,
) -> tuple[PortfolioState, np.ndarray]:
    """One decision step; returns (new state, weights to hold next day).

    The naive scheme replaces the correlation matrix with the identity
    throughout (both the signal rotation and the unit-risk resizing):
    independent per-asset trend-following under a global vol target.
    """
    signal = np.asarray(signal, dtype=float)
    sigma = np.asarray(vol.sigma if isinstance(vol, VolEstimate) else vol, dtype=float)
    c = np.asarray(corr.matrix if isinstance(corr, CorrEstimate) else corr, dtype=float)
    if cfg.scheme == NAIVE:
        c = np.eye(signal.shape[0])
    n = state.smoothed.shape[0]
    if signal.shape != (n,) or sigma.shape != (n,) or c.shape != (n, n):
        raise ParameterError(
            f"dimension mismatch: state {n}, signal {signal.shape}, sigma {sigma.shape}, corr {c.shape}"
        )
    if not np.all(np.isfinite(signal)):
        bad = int(np.flatnonzero(~np.isfinite(signal))[0])
        raise DataError(f"non-finite signal for instrument index {bad}")
    if np.any(sigma <= 0):
        raise ParameterError("volatilities must be strictly positive")

    s = np.sign(signal) if cfg.rule == BINARY else signal
    raw = rotation_matrix(c, cfg.scheme) @ s / sigma
    hat = (1.0 - cfg.smoothing_rho) * state.smoothed + cfg.smoothing_rho * raw
    a = sigma * hat
    m = float(a @ c @ a)
    w = np.zeros(n) if m <= 0.0 else hat / math.sqrt(m) * cfg.daily_scale
    return PortfolioState(smoothed=hat), w


def realize(
    weights: np.ndarray,
    prev_weights: np.ndarray,
    returns: np.ndarray,
    cfg: PortfolioConfig,
) -> tuple[float, float, float]:
    """(gross, net, turnover) of holding ``weights`` over a day with ``returns``."""
    w = np.asarray(weights, dtype=float)
    r = np.nan_to_num(np.asarray(returns, dtype=float))
    gross = float(w @ r)
    turnover = float(np.abs(w - np.asarray(prev_weights, dtype=float)).sum())
    net = gross - cfg.cost_bps * 1e-4 * turnover
    return gross, net, turnover


# ---------------------------------------------------------------------------
# incremental weekly correlation
# ---------------------------------------------------------------------------


class WeeklyCorrTracker:
    """Exponentially weighted correlation of weekly return sums.

    Reproduces matrices.estimate_correlation exactly on fully aligned
    panels; with staggered histories it keeps pairwise weight sums and
    falls back to 0 correlation for pairs with fewer than ``min_weeks``
    joint weeks.
    """

    def __init__(self, n: int, span_days: int = 750, min_weeks: int = 26):
        self.n = n
        self.keep = (1.0 - 1.0 / span_days) ** 5  # weekly carry-over
        self.min_weeks = min_weeks
        self.sx = np.zeros(n)
        self.swc = np.zeros(n)
        self.sxx = np.zeros((n, n))
        self.swp = np.zeros((n, n))
        self.joint = np.zeros((n, n), dtype=int)
        self.s1 = 0.0
        self.s2 = 0.0

    def update(self, week_sum: np.ndarray) -> None:
        x = np.asarray(week_sum, dtype=float)
        valid = np.isfinite(x)
        v = valid.astype(float)
        x0 = np.where(valid, x, 0.0)
        k = self.keep
        self.sx = k * self.sx + x0
        self.swc = k * self.swc + v
        self.sxx = k * self.sxx + np.outer(x0, x0)
        self.swp = k * self.swp + np.outer(v, v)
        self.joint += np.outer(valid, valid).astype(int)
        self.s1 = k * self.s1 + 1.0
        self.s2 = k * k * self.s2 + 1.0

    @property
    def effective_weeks(self) -> float:
        return 0.0 if self.s2 == 0 else self.s1**2 / self.s2

    def ready(self) -> np.ndarray:
        """Columns with enough own history to appear in the matrix."""
        return np.diag(self.joint) >= self.min_weeks

    def estimate(self) -> CorrEstimate:
        n = self.n
        mean = np.divide(self.sx, self.swc, out=np.zeros(n), where=self.swc > 0)
        swp = self.swp
        second = np.divide(self.sxx, swp, out=np.zeros((n, n)), where=swp > 0)
        cov = second - np.outer(mean, mean)
        var = np.clip(np.diag(cov), 0.0, None)
        denom = np.sqrt(np.outer(var, var))
        usable = (self.joint >= self.min_weeks) & (denom > 0)
        corr = np.zeros((n, n))
        corr[usable] = cov[usable] / denom[usable]
        corr = np.clip(corr, -1.0, 1.0)
        corr = 0.5 * (corr + corr.T)
        np.fill_diagonal(corr, 1.0)
        return CorrEstimate(matrix=corr, effective_samples=self.effective_weeks, cleaning="none")


# ---------------------------------------------------------------------------
# full backtest driver
# ---------------------------------------------------------------------------


@dataclass
class PortfolioSeries:
    """Daily output of one strategy run, aligned with the input panel.

    ``weights[t]`` is the position held over day t (decided with data
    through t-1, scaled to the vol target); ``model_sigma[t]`` and
    ``corr_block_id[t]`` record the volatility vector and correlation
    matrix used for that decision, so the unit-risk normalization can be
    re-audited from the outputs alone.
    """

    dates: object
    instruments: list[str]
    weights: np.ndarray
    returns_gross: np.ndarray
    returns_net: np.ndarray
    turnover: np.ndarray
    realized_vol: np.ndarray
    valid: np.ndarray
    config: PortfolioConfig
    model_sigma: np.ndarray = field(repr=False)
    corr_matrices: list = field(repr=False)
    corr_block_id: np.ndarray = field(repr=False)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            wtr = csv.writer(fh, lineterminator="\n")
            wtr.writerow(
                ["date", *(f"w_{name}" for name in self.instruments), "gross", "net", "turnover", "valid"]
            )
            for t in range(len(self.returns_gross)):
                wtr.writerow(
                    [
                        self.dates[t].strftime("%Y-%m-%d"),
                        *(repr(float(x)) for x in self.weights[t]),
                        repr(float(self.returns_gross[t])),
                        repr(float(self.returns_net[t])),
                        repr(float(self.turnover[t])),
                        int(self.valid[t]),
                    ]
                )


def compute_signal_matrix(returns: np.ndarray, spec: IndicatorSpec) -> tuple[np.ndarray, int]:
    """Per-instrument signal paths for the engine-supported indicator kinds.

    Returns (signal matrix, warm-up length in days).  NaN days propagate
    NaN signals; each column is evaluated on its own active slice.
    """
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    t_days, n = r.shape
    out = np.full((t_days, n), np.nan)

    kind, prm = spec.kind, spec.params
    if kind == EMA:
        etas = [prm["eta"]]
    elif kind == NONLINEAR_CUBIC:
        etas = [prm["eta"]]
    elif kind == MACD3:
        etas = list(prm["etas"])
    else:
        raise ParameterError(f"indicator kind {kind!r} is not supported by the backtest engine")
    warm = max(warmup_length(e) for e in etas)

    for j in range(n):
        col = r[:, j]
        idx = np.flatnonzero(np.isfinite(col))
        if idx.size == 0:
            continue
        lo, hi = idx[0], idx[-1] + 1
        seg = col[lo:hi]
        if kind == EMA:
            sig = ema_series(seg, prm["eta"])
        elif kind == NONLINEAR_CUBIC:
            sig = nonlinear_cubic(ema_series(seg, prm["eta"]), prm["c"])
        else:
            phis = [ema_series(seg, e) for e in etas]
            sig = macd3(phis, prm["etas"], prm["omegas"], prm.get("zero_slope", False))
        out[lo:hi, j] = sig
    return out, warm


def _volatility_matrix(returns: np.ndarray, span_days: int) -> np.ndarray:
    r = np.asarray(returns, dtype=float)
    t_days, n = r.shape
    out = np.full((t_days, n), np.nan)
    for j in range(n):
        col = r[:, j]
        idx = np.flatnonzero(np.isfinite(col))
        if idx.size == 0:
            continue
        lo, hi = idx[0], idx[-1] + 1
        out[lo:hi, j] = ewma_volatility(col[lo:hi], 1.0 / span_days)
    return out


def run_backtest(
    panel: ReturnsPanel | np.ndarray,
    spec: IndicatorSpec,
    cfg: PortfolioConfig | None = None,
    corr_span: int = 750,
    vol_span: int = 40,
    corr_method: str = "clip",
    min_weeks: int = 26,
) -> PortfolioSeries:
    """Run the daily pipeline over a panel and return the realized series.

    The correlation matrix is refreshed at the end of every 5-day block
    (single-asset panels skip estimation and use C = 1).  Instruments
    trade once they have cleared the signal and volatility warm-up; the
    ``valid`` mask marks days past the global warm-up
    max(signal warm-up, correlation window) used by the metrics layer.
    """
    if cfg is None:
        cfg = PortfolioConfig()
    if not isinstance(panel, ReturnsPanel):
        panel = panel_from_returns(np.asarray(panel))
    r = panel.returns
    t_days, n = r.shape

    signals, sig_warm = compute_signal_matrix(r, spec)
    sigma = _volatility_matrix(r, vol_span)

    # per-instrument tradeability: past signal/vol warm-up within the active range
    offsets = np.arange(t_days)[:, None] - panel.active_start[None, :]
    warm_need = max(sig_warm, vol_span)
    tradeable = (
        np.isfinite(signals)
        & np.isfinite(sigma)
        & (sigma > 0)
        & (offsets >= warm_need)
    )

    # weekly correlation schedule; single-asset and naive runs use the
    # identity and skip estimation (warm-up kept aligned with estimating runs)
    single = n == 1
    tracker = WeeklyCorrTracker(n, span_days=corr_span, min_weeks=min_weeks)
    corr_mats: list[np.ndarray] = []
    rot_mats: list[np.ndarray] = []
    block_id = np.full(t_days, -1, dtype=int)
    corr_ready_day = 0 if single else None

    if single or cfg.scheme == NAIVE:
        corr_mats.append(np.eye(n))
        rot_mats.append(np.eye(n))
        if single:
            block_id[:] = 0
        else:
            corr_ready_day = min(5 * min_weeks - 1, t_days - 1)
            block_id[corr_ready_day:] = 0
    else:
        current = -1
        for e in range(4, t_days, 5):
            wk = r[e - 4 : e + 1]
            ok = np.isfinite(wk).all(axis=0)
            sums = np.where(ok, np.nansum(wk, axis=0), np.nan)
            tracker.update(sums)
            if tracker.ready().sum() >= 2:
                est = tracker.estimate()
                q = n / max(tracker.effective_weeks, 1.0)
                cleaned = clean_correlation(est, method=corr_method, q=q)
                corr_mats.append(cleaned.matrix)
                rot_mats.append(rotation_matrix(cleaned.matrix, cfg.scheme))
                current = len(corr_mats) - 1
                if corr_ready_day is None:
                    corr_ready_day = e
            block_id[e : min(e + 5, t_days)] = current
        if corr_ready_day is None:
            raise DataError("panel too short to ever estimate a correlation matrix")

    # raw rotated signals at each decision day
    raw = np.zeros((t_days, n))
    s_in = np.where(tradeable, np.where(np.isfinite(signals), signals, 0.0), 0.0)
    if cfg.rule == BINARY:
        s_in = np.sign(s_in)
    sig_fill = np.where(tradeable & np.isfinite(sigma), sigma, np.inf)  # 1/inf -> 0
    for b in range(len(corr_mats)):
        rows = block_id == b
        if not rows.any():
            continue
        raw[rows] = (s_in[rows] @ rot_mats[b].T) / sig_fill[rows]
    raw[block_id < 0] = 0.0

    # smoothing of the unnormalized vector (hat[t] absorbs raw[t])
    rho = cfg.smoothing_rho
    hat = lfilter([rho], [1.0, -(1.0 - rho)], raw, axis=0)
    hat_eff = np.where(tradeable, hat, 0.0)

    # unit-risk normalization with the decision day's Sigma and C
    a = hat_eff * np.where(np.isfinite(sigma), sigma, 0.0)
    m = np.zeros(t_days)
    for b in range(len(corr_mats)):
        rows = block_id == b
        if not rows.any():
            continue
        ab = a[rows]
        m[rows] = np.einsum("ij,ij->i", ab @ corr_mats[b], ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(m[:, None] > 0, hat_eff / np.sqrt(m)[:, None], 0.0)

    # weights decided at t are held over day t+1
    weights = np.zeros((t_days, n))
    weights[1:] = unit[:-1] * cfg.daily_scale
    model_sigma = np.full((t_days, n), np.nan)
    model_sigma[1:] = sigma[:-1]
    decision_block = np.full(t_days, -1, dtype=int)
    decision_block[1:] = block_id[:-1]

    r_fill = np.nan_to_num(r)
    gross = np.einsum("ij,ij->i", weights, r_fill)
    turnover = np.abs(np.diff(weights, axis=0, prepend=np.zeros((1, n)))).sum(axis=1)
    net = gross - cfg.cost_bps * 1e-4 * turnover

    # trailing annualized vol of net returns
    held = np.abs(weights).sum(axis=1) > 0
    rv = np.full(t_days, np.nan)
    if held.any():
        first = int(np.argmax(held))
        rv[first:] = ewma_volatility(net[first:], 1.0 / vol_span) * math.sqrt(TRADING_DAYS)

    global_warm = max(sig_warm, 0 if single else (corr_ready_day or 0))
    valid = np.zeros(t_days, dtype=bool)
    valid[global_warm + 1 :] = held[global_warm + 1 :]

    return PortfolioSeries(
        dates=panel.dates,
        instruments=panel.instruments,
        weights=weights,
        returns_gross=gross,
        returns_net=net,
        turnover=turnover,
        realized_vol=rv,
        valid=valid,
        config=cfg,
        model_sigma=model_sigma,
        corr_matrices=corr_mats,
        corr_block_id=decision_block,
    )
