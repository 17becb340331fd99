"""Black-Scholes prices, delta, gamma, and the gamma-squared hedging weight.

Everything here is a pure function of its arguments and broadcasts over
numpy arrays, so the quadrature and simulation layers can evaluate whole
grids at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

# Weight evaluations blow up like 1/(T-t); refuse to evaluate closer to
# expiry than this backstop (callers truncate well before it).
MIN_TIME_TO_EXPIRY = 1e-6


@dataclass(frozen=True)
class MarketParams:
    """Lognormal market under the pricing measure."""

    spot: float
    rate: float = 0.05
    sigma: float = 0.3

    def __post_init__(self):
        if not (math.isfinite(self.spot) and self.spot > 0):
            raise DomainError(f"spot must be positive and finite, got {self.spot}")
        if not math.isfinite(self.rate):
            raise DomainError(f"rate must be finite, got {self.rate}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"sigma must be nonnegative and finite, got {self.sigma}")


@dataclass(frozen=True)
class OptionSpec:
    """European option being hedged. `strike` is in the same unit as spot."""

    strike: float
    maturity: float
    kind: str = "call"

    def __post_init__(self):
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise DomainError(f"strike must be positive, got {self.strike}")
        if not (math.isfinite(self.maturity) and self.maturity > 0):
            raise DomainError(f"maturity must be positive, got {self.maturity}")
        if self.kind not in ("call", "put"):
            raise DomainError(f"kind must be 'call' or 'put', got {self.kind!r}")

    @classmethod
    def from_moneyness(cls, moneyness, maturity, spot=1.0, kind="call"):
        return cls(strike=moneyness * spot, maturity=maturity, kind=kind)

    def moneyness(self, spot):
        return self.strike / spot


def norm_cdf(x):
    return ndtr(x)


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def _d1(x, k, tau, r, sigma):
    return (np.log(x / k) + (r + 0.5 * sigma * sigma) * tau) / (sigma * np.sqrt(tau))


def call_price(x, k, tau, r, sigma):
    """Call value with time to maturity tau; tau=0 or sigma=0 fall back to limits."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(x <= 0) or np.any(k <= 0):
        raise DomainError("spot and strike must be positive")
    if tau < 0:
        raise DomainError(f"negative time to maturity: {tau}")
    if tau == 0:
        return np.maximum(x - k, 0.0)
    if sigma == 0:
        return np.maximum(x - k * np.exp(-r * tau), 0.0)
    d1 = _d1(x, k, tau, r, sigma)
    d2 = d1 - sigma * math.sqrt(tau)
    return x * ndtr(d1) - k * np.exp(-r * tau) * ndtr(d2)


def put_price(x, k, tau, r, sigma):
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(x <= 0) or np.any(k <= 0):
        raise DomainError("spot and strike must be positive")
    if tau < 0:
        raise DomainError(f"negative time to maturity: {tau}")
    if tau == 0:
        return np.maximum(k - x, 0.0)
    if sigma == 0:
        return np.maximum(k * np.exp(-r * tau) - x, 0.0)
    d1 = _d1(x, k, tau, r, sigma)
    d2 = d1 - sigma * math.sqrt(tau)
    return k * np.exp(-r * tau) * ndtr(-d2) - x * ndtr(-d1)


def bs_price(market: MarketParams, opt: OptionSpec, t: float = 0.0):
    """Value at time t of the option, spot fixed at market.spot."""
    if not 0 <= t <= opt.maturity:
        raise DomainError(f"t={t} outside [0, {opt.maturity}]")
    tau = opt.maturity - t
    if opt.kind == "call":
        return float(call_price(market.spot, opt.strike, tau, market.rate, market.sigma))
    return float(put_price(market.spot, opt.strike, tau, market.rate, market.sigma))


def otm_option_price(spot, t, k, r, sigma):
    """Out-of-the-money option price kernel: put below the forward, call above.

    Price of maturity-t strike-k European option on `spot`; the put branch is
    taken for k <= e^{rt} * spot, the call branch above. Put-call parity at
    the forward strike makes the two branches agree there, so the kernel is
    continuous in k.
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k_arr <= 0):
        raise DomainError("strike grid must be positive")
    if t < 0:
        raise DomainError(f"negative maturity: {t}")
    fwd = spot * math.exp(r * t)
    below = k_arr <= fwd
    out = np.empty_like(k_arr)
    if below.any():
        out[below] = put_price(spot, k_arr[below], t, r, sigma)
    if (~below).any():
        out[~below] = call_price(spot, k_arr[~below], t, r, sigma)
    if np.ndim(k) == 0:
        return float(out[0])
    return out


def bs_delta(t, x, opt: OptionSpec, r, sigma):
    """Call delta Phi(d1); put delta is call delta - 1."""
    tau = opt.maturity - t
    if np.any(np.asarray(tau) <= 0):
        raise DomainError("delta is only defined strictly before expiry")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("spot must be positive")
    if sigma == 0:
        # zero-vol limit: delta is the forward-moneyness indicator
        d = (np.log(x / opt.strike) + r * tau > 0).astype(float)
    else:
        d = ndtr(_d1(x, opt.strike, tau, r, sigma))
    if opt.kind == "put":
        d = d - 1.0
    return d if isinstance(d, np.ndarray) and d.ndim else float(d)


def bs_gamma(t, x, opt: OptionSpec, r, sigma):
    """dDelta/dx; shared by calls and puts of the same strike and maturity."""
    tau = opt.maturity - t
    if np.any(np.asarray(tau) <= 0):
        raise DomainError("gamma is only defined strictly before expiry")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("spot must be positive")
    if sigma == 0:
        g = np.zeros_like(x)
        return g if g.ndim else 0.0
    d1 = _d1(x, opt.strike, tau, r, sigma)
    g = norm_pdf(d1) / (x * sigma * np.sqrt(tau))
    return g if isinstance(g, np.ndarray) and g.ndim else float(g)


def _check_weight_time(t, maturity):
    tau = maturity - np.asarray(t, dtype=float)
    if np.any(tau < MIN_TIME_TO_EXPIRY):
        raise DomainError(
            f"weight evaluation requires maturity - t >= {MIN_TIME_TO_EXPIRY}; "
            "truncate the time grid before expiry"
        )
    return tau


def gamma_weight(t, x, opt: OptionSpec, r, sigma):
    """Gamma-squared quadrature weight in forward space.

    Equals e^{-3r(T-t)} * x * gamma(t, e^{-r(T-t)} x)^2; evaluated here in
    the equivalent direct form
        exp(-r(T-t) - ((log(x/K) + sigma^2 (T-t)/2) / (sigma sqrt(T-t)))^2)
        / (2 pi x sigma^2 (T-t)).
    Strictly positive, singular as t -> T.
    """
    tau = _check_weight_time(t, opt.maturity)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("weight argument must be positive")
    if sigma <= 0:
        raise DomainError("weight requires sigma > 0")
    h = (np.log(x / opt.strike) + 0.5 * sigma * sigma * tau) / (sigma * np.sqrt(tau))
    w = np.exp(-r * tau - h * h) / (2.0 * math.pi * x * sigma * sigma * tau)
    return w if isinstance(w, np.ndarray) and w.ndim else float(w)


def gamma_weight_dt(t, x, opt: OptionSpec, r, sigma):
    """Time derivative of gamma_weight (same domain guards)."""
    tau = _check_weight_time(t, opt.maturity)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("weight argument must be positive")
    if sigma <= 0:
        raise DomainError("weight requires sigma > 0")
    lg = np.log(x / opt.strike)
    h = (lg + 0.5 * sigma * sigma * tau) / (sigma * np.sqrt(tau))
    s2 = sigma * sigma
    num = s2 * (4.0 + 4.0 * r * tau + s2 * tau) * tau - 4.0 * lg * lg
    den = 8.0 * math.pi * s2 * s2 * tau**3 * x
    w = num / den * np.exp(-r * tau - h * h)
    return w if isinstance(w, np.ndarray) and w.ndim else float(w)
