"""Closed-form Sharpe ratios and stationary moments of the diffusive trend model.

The return model for a single instrument is

    r_t = eps_t + beta * sum_{k<=t-1} (1-lam)^(t-1-k) * xi_k,

with i.i.d. standard-normal eps and xi.  After the rescaling
beta = beta0*sqrt(lam*(2-lam)) the stationary return variance is 1+beta0^2
and the lag-k autocovariance is beta0^2*(1-lam)^k.  The trend signal is an
exponential average of past returns,

    s_t = gamma * sum_{k<=t-1} (1-eta)^(t-1-k) * r_k.

Everything in this module is a pure function of the model parameters.
Shorthand used throughout: p = 1-eta, q = 1-lam.

Every closed form here is pinned by an independent route in the tests:
brute-force double sums over the return covariance matrix (machine
precision at every horizon), numeric optimization, or long simulations.
Beware that variants of the stationary signal variance circulate with a
missing (1+pq) factor on the trend term; the form below is the one the
double sum and the simulations agree on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .errors import ParameterError

TRADING_DAYS = 255


# ---------------------------------------------------------------------------
# parameter carrier
# ---------------------------------------------------------------------------


@dataclass
class TheoryParams:
    """Bag of model/strategy parameters used by the closed forms.

    Only the fields relevant to a given formula need to be set.
    ``rho_xf`` is the signal/return correlation, ``(mu_x, sigma_x)`` and
    ``(mu_f, sigma_f)`` the return/forecast moments of the binary-rule
    formulas, and ``(a, b)`` the long/short position sizes.
    """

    lam: float = 0.01
    beta0: float = 0.1
    eta: float = 0.01
    theta: float = 0.0
    n_assets: int = 1
    rho_sq: float = 0.0
    rho_eps: float = 0.0
    sigma: float = 1.0
    gamma: float = 1.0
    rho_xf: float | None = None
    mu_x: float = 0.0
    sigma_x: float | None = None
    mu_f: float = 0.0
    sigma_f: float | None = None
    a: float = 1.0
    b: float = -1.0

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ParameterError(f"lam must be in (0, 1], got {self.lam}")
        if not 0.0 < self.eta <= 1.0:
            raise ParameterError(f"eta must be in (0, 1], got {self.eta}")
        if self.beta0 < 0.0:
            raise ParameterError(f"beta0 must be >= 0, got {self.beta0}")
        if self.rho_xf is not None and abs(self.rho_xf) > 1.0:
            raise ParameterError(f"|rho_xf| must be <= 1, got {self.rho_xf}")

    def sharpe(self, eta: float | None = None) -> float:
        return sharpe_trend(self.eta if eta is None else eta, self.lam, self.beta0, self.theta)


# ---------------------------------------------------------------------------
# trend-strategy Sharpe and its optimum
# ---------------------------------------------------------------------------


def sharpe_trend(eta: float, lam: float, beta0: float, theta: float = 0.0) -> float:
    """Per-step Sharpe ratio of the EMA trend strategy with linear cost theta.

    S(eta) = (beta0^2*sqrt(2*eta) - (2/pi)*theta*sqrt(eta)*(lam+eta))
             / sqrt((lam+eta)^2 + 2*beta0^2*(lam+eta))

    Multiply by sqrt(TRADING_DAYS) to annualize.
    """
    u = lam + eta
    num = beta0**2 * math.sqrt(2.0 * eta) - (2.0 / math.pi) * theta * math.sqrt(eta) * u
    den = math.sqrt(u * u + 2.0 * beta0**2 * u)
    return num / den


def sharpe_trend_annualized(eta, lam, beta0, theta=0.0):
    return sharpe_trend(eta, lam, beta0, theta) * math.sqrt(TRADING_DAYS)


def eta_opt(lam: float, beta0: float) -> float:
    """Smoothing parameter maximizing sharpe_trend at zero cost: lam*sqrt(1+2*beta0^2/lam)."""
    return lam * math.sqrt(1.0 + 2.0 * beta0**2 / lam)


def eta_opt_numeric(lam: float, beta0: float, theta: float = 0.0) -> float:
    """Numeric argmax of sharpe_trend over eta in (0, 1)."""
    res = minimize_scalar(
        lambda e: -sharpe_trend(e, lam, beta0, theta),
        bounds=(1e-6, 1.0 - 1e-9),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x)


def beta_from_beta0(lam: float, beta0: float) -> float:
    """beta = beta0 * sqrt(lam * (2 - lam))."""
    return beta0 * math.sqrt(lam * (2.0 - lam))


def beta0_from_beta(lam: float, beta: float) -> float:
    return beta / math.sqrt(lam * (2.0 - lam))


# ---------------------------------------------------------------------------
# multi-asset variants
# ---------------------------------------------------------------------------


def sharpe_multidim(
    variant: str,
    n_assets: int,
    eta: float,
    lam: float,
    beta0: float,
    sigma: float = 1.0,
    rho_eps: float = 0.0,
) -> float:
    """Multi-asset Sharpe under three noise-correlation regimes.

    ``eq24``: both noises uncorrelated across assets.
    ``eq39``: both noises share the same correlation matrix (same expression).
    ``eq43``: trend noises uncorrelated, return noises with common
    correlation ``rho_eps``; this variant grows without bound with N.

    With p = 1-eta, q = 1-lam, Q = (1-pq)*sigma^4/beta0^4 and
    R = 1 - q^2 - 2*p^2*q^2:

        eq24/eq39: sqrt(N*q^2*(1-p^2) / (Q^2 + 2Q + R))
        eq43:      sqrt(N*q^2*(1-p^2) / (Q^2*(1-rho_eps^2) + 2Q*(1-rho_eps) + R))
    """
    if n_assets < 1:
        raise ParameterError(f"n_assets must be >= 1, got {n_assets}")
    p, q = 1.0 - eta, 1.0 - lam
    big_q = (1.0 - p * q) * sigma**4 / beta0**4
    big_r = 1.0 - q * q - 2.0 * p * p * q * q
    if variant in ("eq24", "eq39"):
        den = big_q**2 + 2.0 * big_q + big_r
    elif variant == "eq43":
        den = big_q**2 * (1.0 - rho_eps**2) + 2.0 * big_q * (1.0 - rho_eps) + big_r
    else:
        raise ParameterError(f"unknown variant {variant!r}; expected eq24, eq39 or eq43")
    return math.sqrt(n_assets * q * q * (1.0 - p * p) / den)


def scaling_factor(n_assets: int, rho_sq: float) -> float:
    """Sharpe multiplier from diversifying over N assets with mean squared correlation rho_sq."""
    if n_assets < 1:
        raise ParameterError(f"n_assets must be >= 1, got {n_assets}")
    if not 0.0 <= rho_sq <= 1.0:
        raise ParameterError(f"rho_sq must be in [0, 1], got {rho_sq}")
    return math.sqrt(n_assets / (1.0 + (n_assets - 1) * rho_sq))


# ---------------------------------------------------------------------------
# stationary moments of the signal/return pair
# ---------------------------------------------------------------------------


def stationary_return_var(beta0: float) -> float:
    return 1.0 + beta0**2


def stationary_signal_return_cov(lam: float, eta: float, beta0: float, gamma: float = 1.0) -> float:
    """<s, r> in the stationary regime: gamma * beta0^2 * q / (1 - p*q)."""
    p, q = 1.0 - eta, 1.0 - lam
    if p * q >= 1.0:
        raise ParameterError("(1-eta)*(1-lam) must be < 1")
    return gamma * beta0**2 * q / (1.0 - p * q)


def stationary_signal_var(lam: float, eta: float, beta0: float, gamma: float = 1.0) -> float:
    """<s, s> in the stationary regime.

    gamma^2 * (1 - pq + beta0^2*(1+pq)) / ((1-pq) * (1-p^2))

    Derived from sum_{i,j>=0} p^(i+j) * acov(|i-j|) with
    acov(d) = delta_d0 + beta0^2*q^d.
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must be in (0, 1), got {eta}")
    p, q = 1.0 - eta, 1.0 - lam
    pq = p * q
    return gamma**2 * (1.0 - pq + beta0**2 * (1.0 + pq)) / ((1.0 - pq) * (1.0 - p * p))


def _geom(z: float, k0: int, k1: int) -> float:
    # sum_{k=k0}^{k1} z^k, empty sum -> 0
    if k1 < k0:
        return 0.0
    if z == 1.0:
        return float(k1 - k0 + 1)
    return z**k0 * (1.0 - z ** (k1 - k0 + 1)) / (1.0 - z)


def signal_return_cov_finite(
    t: int, lam: float, eta: float, beta0: float, gamma: float = 1.0
) -> float:
    """<s_t, r_t> at finite horizon t (recovers the stationary value as t grows)."""
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    p, q = 1.0 - eta, 1.0 - lam
    x = 1.0 / (p * q)
    y = q / p
    return (
        gamma
        * beta0**2
        * p ** (t - 1)
        * q**t
        * (_geom(x, 1, t - 1) - _geom(y, 1, t - 1) / q**2)
    )


def signal_var_finite(t: int, lam: float, eta: float, beta0: float, gamma: float = 1.0) -> float:
    """<s_t, s_t> at finite horizon t.

    Closed-form geometric sums over the return covariance
    C_jk = delta_jk + beta0^2*(q^|j-k| - q^(j+k-2)), 1 <= j,k <= t-1:

        var = gamma^2 * p^(2t-2) * (A + 2*beta0^2*(B - D/q^2))

    with A the diagonal part and B, D the q^(k-l) / q^(k+l) off-diagonal
    parts.  Matches the brute-force double sum to machine precision.
    """
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    p, q = 1.0 - eta, 1.0 - lam
    a = q / p
    c = 1.0 / (p * q)
    A = (1.0 + beta0**2) * _geom(1.0 / p**2, 1, t - 1) - beta0**2 / q**2 * _geom(a * a, 1, t - 1)
    B = (_geom(1.0 / p**2, 2, t - 1) - c * _geom(a, 2, t - 1)) / (c - 1.0)
    if abs(a - 1.0) < 1e-9:
        # lam == eta limit: sum_{2<=k<=t-1} (k-1)
        D = 0.5 * (t - 1) * (t - 2)
    else:
        D = (_geom(a * a, 2, t - 1) - a * _geom(a, 2, t - 1)) / (a - 1.0)
    return gamma**2 * p ** (2 * t - 2) * (A + 2.0 * beta0**2 * (B - D / q**2))


def signal_return_corr(lam: float, eta: float, beta0: float) -> float:
    """Stationary correlation between the EMA signal and the next return."""
    cov = stationary_signal_return_cov(lam, eta, beta0, 1.0)
    return cov / math.sqrt(stationary_signal_var(lam, eta, beta0, 1.0) * stationary_return_var(beta0))


# ---------------------------------------------------------------------------
# sign (binary) trading rule
# ---------------------------------------------------------------------------


def two_sided_rule_moments(
    a: float,
    b: float,
    mu_x: float,
    sigma_x: float,
    mu_f: float,
    sigma_f: float,
    rho_xf: float,
) -> tuple[float, float]:
    """E(H) and E(H^2) for H = a*X if F>0 else b*X, (X, F) bivariate normal."""
    if abs(rho_xf) > 1.0:
        raise ParameterError(f"|rho_xf| must be <= 1, got {rho_xf}")
    if sigma_x <= 0 or sigma_f <= 0:
        raise ParameterError("sigma_x and sigma_f must be > 0")
    z = mu_f / sigma_f
    phi_p, phi_m = norm.cdf(z), norm.cdf(-z)
    dens = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    e_h = mu_x * (a * phi_p + b * phi_m) + sigma_x * (a - b) * rho_xf * dens
    e_h2 = (
        mu_x**2 * (a * a * phi_p + b * b * phi_m)
        + 2.0 * mu_x * sigma_x * (a * a - b * b) * rho_xf * dens
        + sigma_x**2
        * (
            a * a * (rho_xf**2 * (-z) * dens + phi_p)
            + b * b * (rho_xf**2 * z * dens + phi_m)
        )
    )
    return e_h, e_h2


def two_sided_rule_sharpe(a, b, mu_x, sigma_x, mu_f, sigma_f, rho_xf):
    """Per-step Sharpe of the general two-sided rule."""
    e_h, e_h2 = two_sided_rule_moments(a, b, mu_x, sigma_x, mu_f, sigma_f, rho_xf)
    var = e_h2 - e_h**2
    return e_h / math.sqrt(var)


def sharpe_sign_rule(mu_x: float, sigma_x: float, rho_xf: float) -> tuple[float, float]:
    """(E(H), Sharpe) of the sign rule H = sign(F)*X with an optimal forecast.

    The optimal forecast has mu_f/sigma_f = mu_x/(sigma_x*rho_xf), which
    collapses the general expression to

        E(H) = mu_x*(1 - 2*Phi(-mu_x/(sigma_x*rho_xf)))
               + sigma_x*sqrt(2/pi)*rho_xf*exp(-mu_x^2/(2*sigma_x^2*rho_xf^2))
        SR(H) = E(H) / sqrt(mu_x^2 + sigma_x^2 - E(H)^2)

    For centered returns this reduces to E(H) = sqrt(2/pi)*sigma_x*rho_xf.
    """
    if abs(rho_xf) > 1.0:
        raise ParameterError(f"|rho_xf| must be <= 1, got {rho_xf}")
    if sigma_x <= 0:
        raise ParameterError("sigma_x must be > 0")
    if mu_x == 0.0:
        e_h = sigma_x * math.sqrt(2.0 / math.pi) * rho_xf
    else:
        if rho_xf == 0.0:
            raise ParameterError("rho_xf = 0 with mu_x != 0 leaves the forecast undefined")
        z = mu_x / (sigma_x * rho_xf)
        e_h = mu_x * (1.0 - 2.0 * norm.cdf(-z)) + sigma_x * math.sqrt(2.0 / math.pi) * rho_xf * math.exp(
            -0.5 * z * z
        )
    sr = e_h / math.sqrt(mu_x**2 + sigma_x**2 - e_h**2)
    return e_h, sr


def binary_rule_stats(lam: float, eta: float, beta0: float, gamma: float = 1.0) -> tuple[float, float]:
    """(E(H), Sharpe) per step of sign(s_t)*r_t under the trend model.

    Chains the stationary moments into the centered binary-rule formula.
    Note gamma cancels in both outputs.
    """
    rho = signal_return_corr(lam, eta, beta0)
    return sharpe_sign_rule(0.0, math.sqrt(stationary_return_var(beta0)), rho)


# ---------------------------------------------------------------------------
# linear trading rule
# ---------------------------------------------------------------------------


def sharpe_linear_rule(rho_xf: float) -> float:
    """Per-step Sharpe of H = F*X for centered bivariate-normal (X, F)."""
    if abs(rho_xf) > 1.0:
        raise ParameterError(f"|rho_xf| must be <= 1, got {rho_xf}")
    return rho_xf / math.sqrt(1.0 + rho_xf**2)


def linear_rule_stats(lam: float, eta: float, beta0: float, gamma: float = 1.0) -> tuple[float, float]:
    """(E(H), Sharpe) per step of s_t * r_t under the trend model.

    E(H) = <s, r>; the Sharpe can equivalently be written
    1/sqrt(1 + <s,s><r,r>/<s,r>^2).
    """
    e_h = stationary_signal_return_cov(lam, eta, beta0, gamma)
    return e_h, sharpe_linear_rule(signal_return_corr(lam, eta, beta0))


# ---------------------------------------------------------------------------
# SMA-momentum Sharpe (autocorrelation form)
# ---------------------------------------------------------------------------


def sharpe_sma_momentum(autocorr, n_window: int) -> float:
    """Per-step Sharpe of the linear rule on an n-day momentum sum.

        SR = sum_i rho(i) / sqrt(n + (sum_i rho(i))^2 + sum_{i != j} rho(|i-j|))

    with i, j running over 1..n.  ``autocorr`` maps a positive lag to the
    return autocorrelation at that lag.
    """
    if n_window < 1:
        raise ParameterError(f"n_window must be >= 1, got {n_window}")
    s1 = sum(autocorr(i) for i in range(1, n_window + 1))
    cross = 2.0 * sum((n_window - d) * autocorr(d) for d in range(1, n_window))
    return s1 / math.sqrt(n_window + s1 * s1 + cross)


def trend_autocorr(lam: float, beta0: float):
    """Return-autocorrelation function of the trend model: lag d -> beta0^2*q^d/(1+beta0^2)."""

    def rho(d: int) -> float:
        if d == 0:
            return 1.0
        return beta0**2 * (1.0 - lam) ** abs(d) / (1.0 + beta0**2)

    return rho


# ---------------------------------------------------------------------------
# momentum sign rule with a riskless leg
# ---------------------------------------------------------------------------


def sharpe_momentum_switch(
    mu: float,
    sigma: float,
    rho_n: float,
    r_f: float = 0.0,
    d: float = 0.0,
) -> tuple[float, float, float]:
    """(E, Var, Sharpe) of the long/short switch on the momentum sign.

    The strategy earns r_t when the momentum is positive and 2*r_f - r_t
    otherwise.  ``rho_n`` is the correlation between r_t and the momentum,
    and ``d`` is the standardized momentum mean **with flipped sign**,
    d = -mu_mom/sigma_mom (so d = 0 for centered returns); with this
    convention, and writing Phi/pdf for the standard normal CDF/density,

        E   = (2*Phi(-d) - 1)*mu + 2*(g + Phi(d)*r_f),   g = sigma*rho_n*pdf(d)
        Var = (mu^2 + sigma^2) + 4*r_f*(g - (mu - r_f)*Phi(d)) - E^2

    The Sharpe is (E - r_f)/sqrt(Var).  Deriving rho_n (and hence d) for a
    given window is left to the caller.
    """
    if abs(rho_n) > 1.0:
        raise ParameterError(f"|rho_n| must be <= 1, got {rho_n}")
    g = sigma * rho_n * norm.pdf(d)
    e = (2.0 * norm.cdf(-d) - 1.0) * mu + 2.0 * (g + norm.cdf(d) * r_f)
    var = (mu**2 + sigma**2) + 4.0 * r_f * (g - (mu - r_f) * norm.cdf(d)) - e**2
    return e, var, (e - r_f) / math.sqrt(var)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def sharpe_curve(etas, lam, beta0, theta=0.0, annualized=True):
    """Vectorized S(eta) over a grid, optionally annualized."""
    etas = np.asarray(etas, dtype=float)
    u = lam + etas
    num = beta0**2 * np.sqrt(2.0 * etas) - (2.0 / math.pi) * theta * np.sqrt(etas) * u
    s = num / np.sqrt(u * u + 2.0 * beta0**2 * u)
    return s * math.sqrt(TRADING_DAYS) if annualized else s
