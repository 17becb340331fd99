"""Unit liquidity cost of a delta-hedging program by 2-D quadrature.

The expected cost of continuously rebalancing one option, with spot and
supply-curve slope normalized to 1, is a double integral of the gamma-squared
weight's time derivative against out-of-the-money option prices, plus a
boundary integral at the truncation horizon. Total cost for N options at
slope alpha is alpha * N^2 * spot * I.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import bs_core
from .bs_core import MIN_TIME_TO_EXPIRY, OptionSpec
from .errors import ConfigError, DomainError, NumericalError

# numpy renamed trapz -> trapezoid in 2.0
_trapezoid = getattr(np, "trapezoid", getattr(np, "trapz", None))

# The default strike window suits sigma*sqrt(T) up to 0.3; beyond that the
# integrand leaks outside [0.5, 1.5] and the window is widened.
DEFAULT_TRUNCATION = 0.004
DEFAULT_K_MIN = 0.5
DEFAULT_K_MAX = 1.5
WIDEN_THRESHOLD = 0.3


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform trapezoid grid over hedge time [0, t_max] and strike [k_min, k_max]."""

    t_max: float
    t_step: float = 1e-4
    k_min: float = DEFAULT_K_MIN
    k_max: float = DEFAULT_K_MAX
    k_step: float = 1e-3

    def __post_init__(self):
        if not 0 < self.t_step < self.t_max:
            raise ConfigError(f"need 0 < t_step < t_max, got {self.t_step}, {self.t_max}")
        if not 0 < self.k_min < self.k_max:
            raise ConfigError(f"need 0 < k_min < k_max, got {self.k_min}, {self.k_max}")
        if self.k_step <= 0:
            raise ConfigError(f"k_step must be positive, got {self.k_step}")

    @classmethod
    def for_option(cls, opt: OptionSpec, sigma: float, spot: float = 1.0,
                   t_step: float = 1e-4, k_step: float = 1e-3,
                   truncation: float = DEFAULT_TRUNCATION) -> "QuadratureGrid":
        """Default grid: stop `truncation` before expiry, widen strikes when needed."""
        t_max = opt.maturity - truncation
        if t_max <= 0:
            raise ConfigError(
                f"truncation {truncation} leaves no hedge window for maturity {opt.maturity}; "
                "pass a smaller truncation"
            )
        m = opt.strike / spot
        k_min, k_max = DEFAULT_K_MIN, DEFAULT_K_MAX
        stretch = sigma * math.sqrt(opt.maturity)
        if stretch > WIDEN_THRESHOLD or not 0.6 <= m <= 1.4:
            k_min = min(k_min, m * math.exp(-6.0 * stretch))
            k_max = max(k_max, m * math.exp(6.0 * stretch))
        return cls(t_max=t_max, t_step=t_step, k_min=k_min, k_max=k_max, k_step=k_step)

    def t_axis(self) -> np.ndarray:
        n = int(round(self.t_max / self.t_step))
        return np.linspace(0.0, self.t_max, n + 1)

    def k_axis(self) -> np.ndarray:
        n = int(round((self.k_max - self.k_min) / self.k_step))
        return np.linspace(self.k_min, self.k_max, n + 1)

    def to_dict(self) -> dict:
        return {
            "t_step": self.t_step,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "k_step": self.k_step,
            "t_max": self.t_max,
        }


@dataclass(frozen=True)
class UnitCostResult:
    I: float
    interior_term: float
    boundary_term: float
    grid: QuadratureGrid

    def to_dict(self) -> dict:
        return {
            "I": self.I,
            "interior_term": self.interior_term,
            "boundary_term": self.boundary_term,
            "grid": self.grid.to_dict(),
        }


def _phi_matrix(spot, t_col, k_row, r, sigma):
    """OTM option prices on a (time, strike) grid; maturity varies by row.

    The call branch is filled via put-call parity, which costs ~1 ulp of
    absolute accuracy in the far tail but halves the normal-cdf work.
    The t=0 row is identically zero (intrinsic value of the OTM side).
    """
    t = t_col[:, None]
    k = k_row[None, :]
    pos = t[:, 0] > 0.0
    out = np.zeros((t_col.size, k_row.size))
    if not pos.any():
        return out
    tp = t[pos]
    st = sigma * np.sqrt(tp)
    d1 = (np.log(spot / k) + (r + 0.5 * sigma * sigma) * tp) / st
    d2 = d1 - st
    disc_k = k * np.exp(-r * tp)
    put = disc_k * ndtr(-d2) - spot * ndtr(-d1)
    call = put + spot - disc_k
    out[pos] = np.where(k <= spot * np.exp(r * tp), put, call)
    return out


def weighted_qv_expectation(weight, weight_dt, horizon, r, sigma, spot, grid,
                            phi_fn=None, chunk=256):
    """Expected integral of a weight against the futures quadratic variation.

    Computes
        -2 * int_0^H int e^{r(2H-t)} dw/dt(t, e^{r(H-t)} k) phi_t(spot, k) dk dt
        +2 * e^{rH} int w(H, k) phi_H(spot, k) dk
    by composite trapezoid on `grid`. `weight` and `weight_dt` are callables
    of (t, x) broadcasting over arrays; pass weight_dt=None for weights with
    no time dependence. `phi_fn(t_col, k_row)` may replace the Black-Scholes
    price kernel. Inner integrals are assembled into a fixed-order array and
    reduced with pairwise summation, so results do not depend on chunking.

    Returns (interior_term, boundary_term).
    """
    results = _qv_quadrature([(weight, weight_dt)], horizon, r, sigma, spot,
                             grid, phi_fn=phi_fn, chunk=chunk)
    return results[0]


def _qv_quadrature(weight_pairs, horizon, r, sigma, spot, grid, phi_fn=None, chunk=256):
    if sigma <= 0:
        raise DomainError(f"quadrature requires sigma > 0, got {sigma}")
    t = grid.t_axis()
    k = grid.k_axis()
    dt = t[-1] / (t.size - 1)
    dk = (k[-1] - k[0]) / (k.size - 1)
    if phi_fn is None:
        phi_fn = lambda t_col, k_row: _phi_matrix(spot, t_col, k_row, r, sigma)

    inner = np.zeros((len(weight_pairs), t.size))
    needs_t = [i for i, (_, dw) in enumerate(weight_pairs) if dw is not None]
    # keep each (rows x strikes) work array near ~30 MB however wide the grid
    chunk = max(8, min(chunk, int(4e6 / k.size)))
    if needs_t:
        for lo in range(0, t.size, chunk):
            sl = slice(lo, min(lo + chunk, t.size))
            t_col = t[sl]
            phi_m = phi_fn(t_col, k)
            x = np.exp(r * (horizon - t_col))[:, None] * k[None, :]
            for i in needs_t:
                integrand = weight_pairs[i][1](t_col[:, None], x) * phi_m
                if not np.all(np.isfinite(integrand)):
                    bad = np.argwhere(~np.isfinite(integrand))[0]
                    raise NumericalError(
                        f"non-finite integrand at t={t_col[bad[0]]:.6g}, k={k[bad[1]]:.6g}"
                    )
                inner[i, sl] = _trapezoid(integrand, dx=dk, axis=1)

    phi_h = phi_fn(np.array([horizon]), k)[0]
    results = []
    time_factor = np.exp(r * (2.0 * horizon - t))
    for i, (w, dw) in enumerate(weight_pairs):
        interior = 0.0
        if dw is not None:
            interior = -2.0 * float(_trapezoid(time_factor * inner[i], dx=dt))
        boundary_integrand = w(horizon, k) * phi_h
        if not np.all(np.isfinite(boundary_integrand)):
            bad = int(np.argwhere(~np.isfinite(boundary_integrand))[0])
            raise NumericalError(f"non-finite boundary integrand at k={k[bad]:.6g}")
        boundary = 2.0 * math.exp(r * horizon) * float(_trapezoid(boundary_integrand, dx=dk))
        results.append((interior, boundary))
    return results


def _option_weight_pair(opt: OptionSpec, r, sigma):
    w = lambda t, x: bs_core.gamma_weight(t, x, opt, r, sigma)
    dw = lambda t, x: bs_core.gamma_weight_dt(t, x, opt, r, sigma)
    return w, dw


def unit_liquidity_cost(opt: OptionSpec, r, sigma, grid: QuadratureGrid | None = None,
                        phi_fn=None) -> UnitCostResult:
    """Unit liquidity cost I for hedging one option, spot normalized to 1.

    `opt.strike` is interpreted as moneyness (strike over spot). The hedge is
    truncated at grid.t_max, by default 0.004 (one trading day) before expiry,
    where the weight would otherwise blow up.
    """
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if grid is None:
        grid = QuadratureGrid.for_option(opt, sigma)
    if grid.t_max >= opt.maturity - MIN_TIME_TO_EXPIRY:
        raise ConfigError(
            f"grid.t_max={grid.t_max} must stop short of maturity {opt.maturity}"
        )
    w, dw = _option_weight_pair(opt, r, sigma)
    interior, boundary = weighted_qv_expectation(w, dw, grid.t_max, r, sigma, 1.0,
                                                 grid, phi_fn=phi_fn)
    return UnitCostResult(I=interior + boundary, interior_term=interior,
                          boundary_term=boundary, grid=grid)


def unit_cost_sweep(maturities, strikes, r, sigma, t_step=1e-4, k_step=1e-3,
                    truncation=DEFAULT_TRUNCATION, kind="call"):
    """Unit cost over a (maturity, moneyness) grid, sharing the price kernel.

    The option price matrix is the expensive part of the quadrature and does
    not depend on the strike being hedged, so all strikes of one maturity are
    integrated in a single pass. Returns a list of row dicts.
    """
    rows = []
    for T in maturities:
        opts = [OptionSpec(strike=float(m), maturity=float(T), kind=kind) for m in strikes]
        grids = [QuadratureGrid.for_option(o, sigma, t_step=t_step, k_step=k_step,
                                           truncation=truncation) for o in opts]
        merged = QuadratureGrid(
            t_max=grids[0].t_max, t_step=t_step,
            k_min=min(g.k_min for g in grids), k_max=max(g.k_max for g in grids),
            k_step=k_step,
        )
        pairs = [_option_weight_pair(o, r, sigma) for o in opts]
        results = _qv_quadrature(pairs, merged.t_max, r, sigma, 1.0, merged)
        for o, (interior, boundary) in zip(opts, results):
            rows.append({
                "maturity": o.maturity,
                "moneyness": o.strike,
                "I": interior + boundary,
                "interior_term": interior,
                "boundary_term": boundary,
            })
    return rows


def expected_liquidity_cost(alpha, n_options, spot, unit_cost):
    """Total expected cost alpha * n_options^2 * spot * unit_cost."""
    if alpha < 0:
        raise DomainError(f"supply-curve slope must be nonnegative, got {alpha}")
    if n_options < 0:
        raise DomainError(f"option count must be nonnegative, got {n_options}")
    if spot <= 0:
        raise DomainError(f"spot must be positive, got {spot}")
    return alpha * n_options * n_options * spot * unit_cost
