"""Simulation and second-moment analysis of the diffusive trend process.

Daily returns of N instruments are generated as

    r[t] = eps[t] + g[t],      g[t+1] = (1-lam)*g[t] + beta*xi[t],

where eps and xi are standard-normal draws, correlated across instruments
by ``corr_eps`` and ``corr_xi`` and independent across time.  The latent
trend g relaxes at rate lam; beta = beta0*sqrt(lam*(2-lam)) so that the
stationary per-asset return variance is 1 + beta0^2 regardless of lam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DataError, MatrixError, ParameterError
from .rng import SIMULATE, derive_rng
from .theory import beta_from_beta0, beta0_from_beta

_PSD_TOL = 1e-10


def _validate_correlation(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise MatrixError(f"{name} must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-12):
        raise MatrixError(f"{name} is not symmetric")
    if not np.allclose(np.diag(mat), 1.0, atol=1e-12):
        raise MatrixError(f"{name} diagonal must be 1")
    w = np.linalg.eigvalsh(mat)
    if w.min() < -_PSD_TOL:
        raise MatrixError(f"{name} is not positive semi-definite (min eigenvalue {w.min():.3e})")
    return mat


def _chol_factor(mat: np.ndarray) -> np.ndarray:
    # symmetric factor via eigendecomposition, negative eigenvalues clipped at 0
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


@dataclass
class ProcessParams:
    """Parameter set of the trend process.

    Exactly one of ``beta0`` (normalized trend strength) or ``beta`` (raw
    per-day strength) should be given; the other is derived through
    beta = beta0*sqrt(lam*(2-lam)).  Correlation matrices default to the
    identity.
    """

    lam: float
    beta0: float | None = None
    beta: float | None = None
    n_assets: int = 1
    corr_eps: np.ndarray | None = None
    corr_xi: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ParameterError(f"lam must be in (0, 1], got {self.lam}")
        if (self.beta0 is None) == (self.beta is None):
            raise ParameterError("set exactly one of beta0 or beta")
        if self.beta0 is None:
            self.beta0 = beta0_from_beta(self.lam, self.beta)
        else:
            self.beta = beta_from_beta0(self.lam, self.beta0)
        if self.beta0 < 0:
            raise ParameterError(f"beta0 must be >= 0, got {self.beta0}")
        if self.n_assets < 1:
            raise ParameterError(f"n_assets must be >= 1, got {self.n_assets}")
        eye = np.eye(self.n_assets)
        self.corr_eps = eye if self.corr_eps is None else _validate_correlation(self.corr_eps, "corr_eps")
        self.corr_xi = eye if self.corr_xi is None else _validate_correlation(self.corr_xi, "corr_xi")
        for name, mat in (("corr_eps", self.corr_eps), ("corr_xi", self.corr_xi)):
            if mat.shape != (self.n_assets, self.n_assets):
                raise ParameterError(f"{name} shape {mat.shape} does not match n_assets={self.n_assets}")

    def default_burn_in(self) -> int:
        # trend variance within exp(-40) of its stationary value
        return math.ceil(20.0 / self.lam)


def uniform_correlation(n: int, rho: float) -> np.ndarray:
    """N x N matrix with 1 on the diagonal and rho off-diagonal."""
    if n >= 2 and not (-1.0 / (n - 1)) <= rho <= 1.0:
        raise ParameterError(f"rho={rho} makes the uniform correlation non-PSD for n={n}")
    mat = np.full((n, n), float(rho))
    np.fill_diagonal(mat, 1.0)
    return mat


def random_basis_correlation(n: int, rho: float, seed: int = 0) -> np.ndarray:
    """Correlation matrix with the eigenvalue spectrum of uniform_correlation(n, rho)
    but a Haar-random eigenbasis (diagonal renormalized to 1).

    Useful as a trend-noise correlation that no fixed rotation of the
    return correlation can diagonalize: it models trend structure sitting
    in directions unrelated to the return factors.
    """
    if n == 1:
        return np.eye(1)
    rng = derive_rng(seed, SIMULATE, 10_000 + n)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))  # Haar measure
    w = np.linalg.eigvalsh(uniform_correlation(n, rho))
    m = (q * w) @ q.T
    d = np.sqrt(np.diag(m))
    m = m / np.outer(d, d)
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 1.0)
    return m


@dataclass
class SimulatedPath:
    """Simulated returns with the latent trend component split out.

    ``returns - trend`` is the i.i.d. noise component; the path after
    ``burn_in`` discarded steps is approximately stationary.  Paths are
    bit-reproducible given (seed, params, t_steps, burn_in).
    """

    returns: np.ndarray
    trend: np.ndarray
    seed: int
    burn_in: int
    params: ProcessParams = field(repr=False)


def simulate(
    params: ProcessParams,
    t_steps: int,
    burn_in: int | None = None,
    seed: int = 0,
    path_index: int = 0,
) -> SimulatedPath:
    """Simulate ``t_steps`` retained days of the trend process.

    ``path_index`` selects an independent stream under the same root seed,
    so Monte Carlo batches can be generated in any order.
    """
    if t_steps < 1:
        raise ParameterError(f"t_steps must be >= 1, got {t_steps}")
    if burn_in is None:
        burn_in = params.default_burn_in()
    if burn_in < 0:
        raise ParameterError(f"burn_in must be >= 0, got {burn_in}")

    n = params.n_assets
    total = burn_in + t_steps
    rng = derive_rng(seed, SIMULATE, path_index)
    z = rng.standard_normal((2, total, n))
    eps = z[0] @ _chol_factor(params.corr_eps).T
    xi = z[1] @ _chol_factor(params.corr_xi).T

    # g[t+1] = (1-lam)*g[t] + beta*xi[t]  ->  one-step-lagged IIR filter
    trend = lfilter([0.0, params.beta], [1.0, -(1.0 - params.lam)], xi, axis=0)
    returns = eps + trend
    return SimulatedPath(
        returns=returns[burn_in:],
        trend=trend[burn_in:],
        seed=seed,
        burn_in=burn_in,
        params=params,
    )


# ---------------------------------------------------------------------------
# stationary second moments and variograms
# ---------------------------------------------------------------------------


def stationary_autocovariance(params: ProcessParams, lag: int) -> float:
    """Per-asset stationary autocovariance: delta_{lag,0} + beta0^2*(1-lam)^lag."""
    if lag < 0:
        raise ParameterError(f"lag must be >= 0, got {lag}")
    base = params.beta0**2 * (1.0 - params.lam) ** lag
    return base + 1.0 if lag == 0 else base


def variogram_theoretical(params: ProcessParams, lag: int) -> float:
    """Variance of the sum of ``lag`` consecutive stationary returns.

    Geometric form of sum_{j,k<lag} acov(|j-k|):

        lag*(1+beta0^2) + 2*beta0^2 * sum_{m=1}^{lag-1} (lag-m)*q^m

    The triangular sum is evaluated as (q/(1-q)) * sum_j (1 - q^j) with
    expm1: all terms positive, so no cancellation even for lam near 0
    (the textbook two-geometric-series form loses ~1/lam digits there).
    """
    if lag < 1:
        raise ParameterError(f"lag must be >= 1, got {lag}")
    q = 1.0 - params.lam
    b2 = params.beta0**2
    if lag == 1:
        return 1.0 + b2
    if q == 0.0 or b2 == 0.0:
        return float(lag) * (1.0 + b2)
    j = np.arange(1, lag)
    tri = (q / (1.0 - q)) * float(np.sum(-np.expm1(j * math.log(q))))
    return lag * (1.0 + b2) + 2.0 * b2 * tri


def variogram_theoretical_brute(params: ProcessParams, lag: int) -> float:
    """Double-sum reference for variogram_theoretical (kept independent on purpose)."""
    if lag < 1:
        raise ParameterError(f"lag must be >= 1, got {lag}")
    idx = np.arange(lag)
    d = np.abs(idx[:, None] - idx[None, :])
    acov = params.beta0**2 * (1.0 - params.lam) ** d
    acov[d == 0] += 1.0
    return float(acov.sum())


def variogram_empirical(
    series: np.ndarray,
    lags,
    standardize_span: int | None = None,
) -> list[tuple[int, float]]:
    """Sample variogram from overlapping windows of a daily return series.

    For each lag tau the value is the sample variance (mean removed,
    ddof=1) of all overlapping tau-step sums.  When ``standardize_span``
    is given, returns are first divided by a trailing EMA volatility with
    that span (previous day's estimate, so no look-ahead); pass None for
    already-standardized series.
    """
    series = np.asarray(series, dtype=float).ravel()
    lags = [int(l) for l in lags]
    if any(l < 1 for l in lags):
        raise ParameterError("lags must be positive")
    max_lag = max(lags)
    if series.size < 2 * max_lag:
        raise DataError(f"series of length {series.size} is too short for max lag {max_lag}")
    if standardize_span is not None:
        from .signals import ewma_volatility

        sig = ewma_volatility(series, 1.0 / standardize_span)
        series = series[1:] / sig[:-1]
    csum = np.concatenate([[0.0], np.cumsum(series)])
    out = []
    for lag in lags:
        sums = csum[lag:] - csum[:-lag]
        out.append((lag, float(np.var(sums, ddof=1))))
    return out
