"""Trend indicators, their sensitivity spectra, and moving-average decompositions.

The workhorse indicator is the volatility-normalized EMA of daily returns,

    sigma2[t] = (1-eta)*sigma2[t-1] + eta*r[t]^2
    phi[t]    = (1-eta)*phi[t-1]   + sqrt(eta)*r[t]/sigma[t-1]

(the division uses the previous day's volatility, exactly as the recursion
is written).  phi is dimensionless; its stationary standard deviation under
i.i.d. returns is 1/sqrt(2-eta), about 0.71 for slow indicators.

Initialization: phi starts at 0 and sigma2 is seeded with the mean square
of the first max(20, 1/eta) returns; the first ceil(3/eta) outputs are
flagged as warm-up and should be excluded from backtests.  The division is
floored at 1e-8 times the largest volatility seen so far, which keeps
stale (all-zero) series finite.

Linear indicators are also described by their sensitivity spectrum psi,
the weights such that indicator[t] = sum_k psi[k]*r[t-k] when volatility
normalization is frozen (sigma == 1).  Price-based indicators (MOM, SMA
and their crossovers) use the convention that the SMA runs over the n
prices strictly before today, giving the SMA gap spectrum (n-k)/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ParameterError, SpectrumError, TruncationError

EMA = "ema"
MACD3 = "macd3"
MOM = "mom"
SMA = "sma"
EMA_CROSS = "ema_cross"
SMA_CROSS = "sma_cross"
BB_MIXTURE = "bb_mixture"
NONLINEAR_CUBIC = "nonlinear_cubic"

LINEAR_KINDS = (EMA, MACD3, MOM, SMA, EMA_CROSS, SMA_CROSS)

DEFAULT_CUBIC_COEFF = 0.33
_FLOOR_FRAC = 1e-8


def _check_eta(eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"eta must be in (0, 1], got {eta}")
    return float(eta)


def warmup_length(eta: float) -> int:
    """Number of leading outputs to treat as warm-up for a given smoothing."""
    return math.ceil(3.0 / _check_eta(eta))


def seed_window(eta: float) -> int:
    return max(20, int(round(1.0 / eta)))


# ---------------------------------------------------------------------------
# streaming EMA state
# ---------------------------------------------------------------------------


@dataclass
class EmaState:
    """Per-instrument state of the normalized EMA recursion.

    ``phi`` and ``sigma2`` are arrays of shape (n_instruments,).
    ``sigma_ref`` tracks the largest volatility seen (floor reference).
    """

    eta: float
    phi: np.ndarray
    sigma2: np.ndarray
    sigma_ref: np.ndarray
    steps: int = 0

    @classmethod
    def initialize(cls, eta: float, seed_returns: np.ndarray) -> "EmaState":
        """Seed sigma2 with the mean square of an initial window of returns."""
        eta = _check_eta(eta)
        seed_returns = np.atleast_2d(np.asarray(seed_returns, dtype=float))
        s2 = np.mean(seed_returns**2, axis=0)
        return cls(
            eta=eta,
            phi=np.zeros(s2.shape),
            sigma2=s2.copy(),
            sigma_ref=np.sqrt(s2),
        )

    @property
    def in_warmup(self) -> bool:
        return self.steps < warmup_length(self.eta)


def ema_update(state: EmaState, r: np.ndarray) -> EmaState:
    """One step of the normalized-EMA recursion; returns the new state.

    The volatility used to scale ``r`` is the one from *before* this
    update.  Guarded against zero volatility by the running floor.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if r.shape != state.phi.shape:
        raise ParameterError(f"return vector shape {r.shape} != state shape {state.phi.shape}")
    if not np.all(np.isfinite(r)):
        raise ParameterError("non-finite return passed to ema_update")
    eta = state.eta
    sigma_prev = np.sqrt(state.sigma2)
    denom = np.maximum(sigma_prev, np.maximum(_FLOOR_FRAC * state.sigma_ref, 1e-30))
    sigma2 = (1.0 - eta) * state.sigma2 + eta * r**2
    phi = (1.0 - eta) * state.phi + math.sqrt(eta) * r / denom
    return EmaState(
        eta=eta,
        phi=phi,
        sigma2=sigma2,
        sigma_ref=np.maximum(state.sigma_ref, np.sqrt(sigma2)),
        steps=state.steps + 1,
    )


# ---------------------------------------------------------------------------
# vectorized series (what backtests use)
# ---------------------------------------------------------------------------


def _ewma(x: np.ndarray, eta: float, init: np.ndarray | float = 0.0) -> np.ndarray:
    # y[t] = (1-eta)*y[t-1] + eta*x[t], y[-1] = init
    x = np.asarray(x, dtype=float)
    init = np.broadcast_to(np.asarray(init, dtype=float), x.shape[1:]) if x.ndim > 1 else init
    zi = np.asarray((1.0 - eta) * np.atleast_1d(init), dtype=float)
    if x.ndim == 1:
        y, _ = lfilter([eta], [1.0, -(1.0 - eta)], x, zi=zi[:1])
    else:
        y, _ = lfilter([eta], [1.0, -(1.0 - eta)], x, axis=0, zi=zi[None, :])
    return y


def ewma_variance(returns: np.ndarray, eta: float) -> np.ndarray:
    """EMA of squared returns, seeded with the mean square of the first
    max(20, 1/eta) observations.  Output[t] uses returns up to and including t."""
    _check_eta(eta)
    r = np.asarray(returns, dtype=float)
    w = min(seed_window(eta), r.shape[0])
    init = np.mean(r[:w] ** 2, axis=0)
    return _ewma(r**2, eta, init)


def ewma_volatility(returns: np.ndarray, eta: float) -> np.ndarray:
    return np.sqrt(ewma_variance(returns, eta))


def ema_series(returns: np.ndarray, eta: float, normalized: bool = True) -> np.ndarray:
    """Normalized-EMA indicator phi for a (T,) or (T, N) return array.

    With ``normalized=False`` the volatility divisor is frozen at 1
    (phi[t] = (1-eta)*phi[t-1] + sqrt(eta)*r[t]), which makes the
    indicator an exactly linear filter of the returns.
    """
    _check_eta(eta)
    r = np.asarray(returns, dtype=float)
    if normalized:
        sig2 = ewma_variance(r, eta)
        sig = np.sqrt(sig2)
        w = min(seed_window(eta), r.shape[0])
        sigma0 = np.sqrt(np.mean(r[:w] ** 2, axis=0))
        sig_prev = np.concatenate([np.broadcast_to(sigma0, (1,) + r.shape[1:]), sig[:-1]], axis=0)
        ref = np.maximum.accumulate(np.maximum(sig_prev, sigma0), axis=0)
        z = r / np.maximum(sig_prev, np.maximum(_FLOOR_FRAC * ref, 1e-30))
    else:
        z = r
    if z.ndim == 1:
        phi = lfilter([math.sqrt(eta)], [1.0, -(1.0 - eta)], z)
    else:
        phi = lfilter([math.sqrt(eta)], [1.0, -(1.0 - eta)], z, axis=0)
    return phi


def solve_macd3_omega1(etas, omega2: float, omega3: float) -> float:
    """Weight on the fastest EMA that pins the spectrum to 0 at lag 0.

    Solves omega1*sqrt(eta1) + omega2*sqrt(eta2) + omega3*sqrt(eta3) = 0.
    """
    e1, e2, e3 = (_check_eta(e) for e in etas)
    if len({e1, e2, e3}) != 3:
        raise ParameterError(f"MACD3 etas must be distinct, got {etas}")
    return -(omega2 * math.sqrt(e2) + omega3 * math.sqrt(e3)) / math.sqrt(e1)


def macd3(phis, etas, omegas, zero_slope: bool = False) -> float | np.ndarray:
    """Three-scale EMA combination: sum_i omega_i * phi(eta_i).

    With ``zero_slope`` the first weight is replaced by the solution of
    the lag-0 constraint given (omega2, omega3).
    """
    e1, e2, e3 = (_check_eta(e) for e in etas)
    if len({e1, e2, e3}) != 3:
        raise ParameterError(f"MACD3 etas must be distinct, got {etas}")
    w1, w2, w3 = omegas
    if zero_slope:
        w1 = solve_macd3_omega1(etas, w2, w3)
    p1, p2, p3 = phis
    return w1 * p1 + w2 * p2 + w3 * p3


def macd3_series(returns, etas, omegas, zero_slope=False, normalized=True):
    phis = [ema_series(returns, e, normalized=normalized) for e in etas]
    return macd3(phis, etas, omegas, zero_slope=zero_slope)


def nonlinear_cubic(phi, c: float = DEFAULT_CUBIC_COEFF):
    """Damped signal phi - c*phi^3 (tempers extreme trends)."""
    phi = np.asarray(phi, dtype=float)
    out = phi - c * phi**3
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# price-based indicators (defined from prices = cumulated returns)
# ---------------------------------------------------------------------------


def _prices(returns: np.ndarray) -> np.ndarray:
    # price path with P=0 flat history before the series starts
    return np.cumsum(np.asarray(returns, dtype=float), axis=0)


def mom_series(returns: np.ndarray, n: int) -> np.ndarray:
    """n-day momentum P[t] - P[t-n], i.e. the sum of the last n returns."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    p = _prices(returns)
    out = p.copy()
    out[n:] = p[n:] - p[:-n]
    return out


def sma_gap_series(returns: np.ndarray, n: int) -> np.ndarray:
    """Price minus the average of the n prices strictly before today."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    p = _prices(returns)
    pad = np.concatenate([np.zeros((n,) + p.shape[1:]), p], axis=0)
    c = np.concatenate([np.zeros((1,) + p.shape[1:]), np.cumsum(pad, axis=0)], axis=0)
    t = np.arange(p.shape[0])
    sma_prev = (c[t + n] - c[t]) / n  # mean of P[t-n .. t-1]
    return p - sma_prev


def ema_cross_series(returns, eta_fast, eta_slow, normalized=False):
    return ema_series(returns, eta_fast, normalized) - ema_series(returns, eta_slow, normalized)


def sma_cross_series(returns, n_fast, n_slow):
    # SMA(fast) - SMA(slow) == gap(slow) - gap(fast)
    return sma_gap_series(returns, n_slow) - sma_gap_series(returns, n_fast)


# ---------------------------------------------------------------------------
# indicator specs and spectra
# ---------------------------------------------------------------------------


@dataclass
class IndicatorSpec:
    """Declarative description of a trend indicator."""

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def ema(cls, eta):
        return cls(EMA, {"eta": _check_eta(eta)})

    @classmethod
    def macd3(cls, etas, omegas, zero_slope=False):
        return cls(MACD3, {"etas": tuple(etas), "omegas": tuple(omegas), "zero_slope": bool(zero_slope)})

    @classmethod
    def mom(cls, n):
        return cls(MOM, {"n": int(n)})

    @classmethod
    def sma(cls, n):
        return cls(SMA, {"n": int(n)})

    @classmethod
    def ema_cross(cls, eta_fast, eta_slow):
        return cls(EMA_CROSS, {"eta_fast": eta_fast, "eta_slow": eta_slow})

    @classmethod
    def sma_cross(cls, n_fast, n_slow):
        return cls(SMA_CROSS, {"n_fast": int(n_fast), "n_slow": int(n_slow)})

    @classmethod
    def cubic(cls, eta, c=DEFAULT_CUBIC_COEFF):
        return cls(NONLINEAR_CUBIC, {"eta": _check_eta(eta), "c": float(c)})

    @classmethod
    def bb_mixture(cls, eta, max_n):
        return cls(BB_MIXTURE, {"eta": _check_eta(eta), "max_n": int(max_n)})

    def resolved_omegas(self):
        w1, w2, w3 = self.params["omegas"]
        if self.params.get("zero_slope"):
            w1 = solve_macd3_omega1(self.params["etas"], w2, w3)
        return (w1, w2, w3)


def sensitivity_spectrum(spec: IndicatorSpec, max_lag: int) -> np.ndarray:
    """Weights psi[0..max_lag] such that indicator[t] = sum_k psi[k]*r[t-k].

    Only defined for the linear kinds; BB mixtures and cubic transforms
    raise SpectrumError.
    """
    if max_lag < 1:
        raise ParameterError(f"max_lag must be >= 1, got {max_lag}")
    k = np.arange(max_lag + 1, dtype=float)

    def ema_psi(eta):
        return math.sqrt(eta) * (1.0 - eta) ** k

    def sma_psi(n):
        return np.where(k < n, (n - k) / n, 0.0)

    kind, prm = spec.kind, spec.params
    if kind == EMA:
        return ema_psi(prm["eta"])
    if kind == MACD3:
        omegas = spec.resolved_omegas()
        return sum(w * ema_psi(e) for w, e in zip(omegas, prm["etas"]))
    if kind == MOM:
        return np.where(k < prm["n"], 1.0, 0.0)
    if kind == SMA:
        return sma_psi(prm["n"])
    if kind == EMA_CROSS:
        return ema_psi(prm["eta_fast"]) - ema_psi(prm["eta_slow"])
    if kind == SMA_CROSS:
        return sma_psi(prm["n_slow"]) - sma_psi(prm["n_fast"])
    raise SpectrumError(f"indicator kind {kind!r} has no linear sensitivity spectrum")


def indicator_series(spec: IndicatorSpec, returns, normalized=False):
    """Evaluate an indicator from its defining recursion (not its spectrum)."""
    kind, prm = spec.kind, spec.params
    if kind == EMA:
        return ema_series(returns, prm["eta"], normalized)
    if kind == MACD3:
        return macd3_series(returns, prm["etas"], prm["omegas"], prm["zero_slope"], normalized)
    if kind == MOM:
        return mom_series(returns, prm["n"])
    if kind == SMA:
        return sma_gap_series(returns, prm["n"])
    if kind == EMA_CROSS:
        return ema_cross_series(returns, prm["eta_fast"], prm["eta_slow"], normalized)
    if kind == SMA_CROSS:
        return sma_cross_series(returns, prm["n_fast"], prm["n_slow"])
    if kind == NONLINEAR_CUBIC:
        return nonlinear_cubic(ema_series(returns, prm["eta"], normalized), prm["c"])
    if kind == BB_MIXTURE:
        return reconstruct_ema_from_sma(returns, prm["eta"], prm["max_n"])
    raise ParameterError(f"unknown indicator kind {kind!r}")


# ---------------------------------------------------------------------------
# EMA -> SMA -> Bollinger decomposition
# ---------------------------------------------------------------------------


def ema_of_returns(returns: np.ndarray, eta: float) -> np.ndarray:
    """Plain unit-mass EMA of returns: eta * sum_k (1-eta)^k * r[t-k]."""
    _check_eta(eta)
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        return lfilter([eta], [1.0, -(1.0 - eta)], r)
    return lfilter([eta], [1.0, -(1.0 - eta)], r, axis=0)


def sma_of_returns(returns: np.ndarray, n: int) -> np.ndarray:
    """Average of the last n returns (including today); shorter at the start."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    r = np.asarray(returns, dtype=float)
    c = np.concatenate([np.zeros((1,) + r.shape[1:]), np.cumsum(r, axis=0)], axis=0)
    t = np.arange(1, r.shape[0] + 1)
    lo = np.maximum(t - n, 0)
    return (c[t] - c[lo]) / n


def ema_to_sma_weights(eta: float, max_n: int) -> tuple[np.ndarray, np.ndarray]:
    """Mixture weights w_n over window sizes n = 1..max_n with
    sum_n w_n * SMA_t(n) == EMA_t(eta).

    w_n is proportional to n*(1-eta)^(n-1); the untruncated weights sum to
    exactly 1 and the returned ones are renormalized.  Raises if the
    truncated mass falls below 1 - 1e-8.
    """
    _check_eta(eta)
    if max_n < 1:
        raise ParameterError(f"max_n must be >= 1, got {max_n}")
    ns = np.arange(1, max_n + 1)
    w = eta**2 * ns * (1.0 - eta) ** (ns - 1.0)
    mass = w.sum()
    if mass < 1.0 - 1e-8:
        raise TruncationError(
            f"max_n={max_n} keeps only {mass:.10f} of the mixture mass for eta={eta}; increase max_n"
        )
    return ns, w / mass


def reconstruct_ema_from_sma(returns: np.ndarray, eta: float, max_n: int) -> np.ndarray:
    """Rebuild the plain EMA as the weighted sum of simple moving averages."""
    ns, w = ema_to_sma_weights(eta, max_n)
    r = np.asarray(returns, dtype=float)
    # accumulate n*SMA(n) incrementally: cumsum windows share their prefix
    c = np.concatenate([np.zeros((1,) + r.shape[1:]), np.cumsum(r, axis=0)], axis=0)
    t = np.arange(1, r.shape[0] + 1)
    out = np.zeros_like(r, dtype=float)
    for n, wn in zip(ns, w):
        lo = np.maximum(t - n, 0)
        out += wn * (c[t] - c[lo]) / n
    return out


def bb_elementary(sma_value: float, delta: float) -> float:
    """Bollinger building block: sign of the SMA once it exits the +/-delta band."""
    if delta < 0:
        raise ParameterError(f"delta must be >= 0, got {delta}")
    if sma_value > delta:
        return 1.0
    if sma_value < -delta:
        return -1.0
    return 0.0


def bb_band_integral(sma_value, delta_max: float, n_points: int = 200_001):
    """Midpoint quadrature of the elementary band indicator over delta in [0, delta_max].

    Converges to the SMA value itself (the band integral telescopes the
    double step function); the midpoint rule error at the |value| = delta
    discontinuity is bounded by delta_max/(2*n_points).  ``delta_max`` must
    exceed |sma_value| for the integral to be complete.
    """
    if n_points < 1:
        raise ParameterError("n_points must be >= 1")
    v = np.asarray(sma_value, dtype=float)
    if delta_max <= float(np.max(np.abs(v))):
        raise ParameterError("delta_max must exceed |sma_value|")
    h = delta_max / n_points
    mids = (np.arange(n_points) + 0.5) * h
    counts = np.searchsorted(mids, np.abs(v)[..., None], side="left").squeeze(-1)
    out = np.sign(v) * counts * h
    return float(out) if out.ndim == 0 else out
