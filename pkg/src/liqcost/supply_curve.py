"""Supply curves from limit-order books and a stationary order-flow model.

A book snapshot yields the marginal price curve m(q) (price of the q-th share
consumed) and the supply curve S(z) = average execution price of a z-share
market order. Linear slopes are fitted two ways: a smoothed slope at z=0 for
continuous trading, and the exact per-trade impact at a fixed size for
discrete trading. A Poisson order-flow model produces expected stationary
depths from which synthetic books are built.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, InsufficientDepthError

CONTINUOUS = "continuous"
DISCRETE = "discrete"


def _check_tick_spacing(prices, tick, label):
    # levels must sit on a tick-spaced ladder (any offset)
    rel = np.diff(prices) / tick
    if np.any(np.abs(rel - np.round(rel)) > 1e-6):
        raise DomainError(f"{label} level spacing is not a multiple of the tick {tick}")


@dataclass(frozen=True)
class BookSnapshot:
    """Outstanding limit orders: asks ascending, bids descending from the touch."""

    asks: tuple  # ((price, size), ...) strictly increasing prices
    bids: tuple  # ((price, size), ...) strictly decreasing prices
    tick: float = 0.01

    def __post_init__(self):
        if self.tick <= 0:
            raise DomainError(f"tick must be positive, got {self.tick}")
        ask_p = np.array([p for p, _ in self.asks], dtype=float)
        bid_p = np.array([p for p, _ in self.bids], dtype=float)
        for side, prices in (("ask", ask_p), ("bid", bid_p)):
            sizes = [s for _, s in (self.asks if side == "ask" else self.bids)]
            if any(s <= 0 for s in sizes):
                raise DomainError(f"{side} sizes must be positive")
            if prices.size > 1:
                diffs = np.diff(prices)
                if side == "ask" and np.any(diffs <= 0):
                    raise DomainError("ask prices must increase strictly")
                if side == "bid" and np.any(diffs >= 0):
                    raise DomainError("bid prices must decrease strictly")
                _check_tick_spacing(np.sort(prices), self.tick, side)
        if ask_p.size and bid_p.size:
            if ask_p[0] <= bid_p[0]:
                raise DomainError(
                    f"crossed book: best ask {ask_p[0]} <= best bid {bid_p[0]}"
                )
            _check_tick_spacing(np.array([bid_p[0], ask_p[0]]), self.tick, "spread")

    @property
    def two_sided(self) -> bool:
        return bool(self.asks) and bool(self.bids)

    @property
    def mid(self) -> float:
        if not self.two_sided:
            raise DomainError("mid price needs both sides of the book")
        return 0.5 * (self.asks[0][0] + self.bids[0][0])

    def depth(self, side) -> float:
        levels = self.asks if side == "ask" else self.bids
        return float(sum(s for _, s in levels))


def load_book_csv(path, tick=None) -> BookSnapshot:
    """Read a (side, price, size) CSV; tick inferred from level spacing if omitted."""
    asks, bids = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            side = row["side"].strip().lower()
            level = (float(row["price"]), float(row["size"]))
            if side == "ask":
                asks.append(level)
            elif side == "bid":
                bids.append(level)
            else:
                raise ConfigError(f"unknown side {row['side']!r} in {path}")
    asks.sort(key=lambda lvl: lvl[0])
    bids.sort(key=lambda lvl: -lvl[0])
    if tick is None:
        prices = sorted({p for p, _ in asks} | {p for p, _ in bids})
        if len(prices) < 2:
            raise ConfigError(f"cannot infer tick from {path}; pass tick explicitly")
        tick = min(round(b - a, 12) for a, b in zip(prices, prices[1:]))
    return BookSnapshot(asks=tuple(asks), bids=tuple(bids), tick=tick)


@dataclass(frozen=True)
class MarginalCurve:
    """Piecewise-constant price of the q-th consumed share, per side."""

    ask_cum: np.ndarray
    ask_prices: np.ndarray
    bid_cum: np.ndarray
    bid_prices: np.ndarray

    @classmethod
    def from_book(cls, book: BookSnapshot) -> "MarginalCurve":
        return cls(
            ask_cum=np.cumsum([s for _, s in book.asks]),
            ask_prices=np.array([p for p, _ in book.asks]),
            bid_cum=np.cumsum([s for _, s in book.bids]),
            bid_prices=np.array([p for p, _ in book.bids]),
        )

    def __call__(self, q):
        """Marginal price at signed quantity q (q > 0 consumes asks)."""
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.empty_like(q_arr)
        for mask, cum, prices in (
            (q_arr > 0, self.ask_cum, self.ask_prices),
            (q_arr < 0, self.bid_cum, self.bid_prices),
        ):
            if mask.any():
                if cum.size == 0:
                    raise InsufficientDepthError("book side is empty", 0.0)
                idx = np.searchsorted(cum, np.abs(q_arr[mask]), side="left")
                if np.any(idx >= cum.size):
                    raise InsufficientDepthError(
                        f"quantity beyond displayed depth {cum[-1]}", float(cum[-1])
                    )
                out[mask] = prices[idx]
        if (q_arr == 0).any():
            raise DomainError("marginal price is undefined at q = 0")
        return float(out[0]) if np.ndim(q) == 0 else out


def supply_price(book: BookSnapshot, z) -> float:
    """Average per-share execution price of a z-share market order (signed).

    z > 0 buys against asks, z < 0 sells against bids, z = 0 returns the mid.
    Raises InsufficientDepthError (carrying the maximum fillable size) when z
    exceeds the displayed depth.
    """
    if z == 0:
        return book.mid
    side = "ask" if z > 0 else "bid"
    levels = book.asks if z > 0 else book.bids
    if not levels:
        raise InsufficientDepthError(f"{side} side is empty", 0.0)
    remaining = abs(z)
    fill_slack = abs(z) * 1e-12  # sequential subtraction can leave an ulp
    total = 0.0
    for price, size in levels:
        take = min(size, remaining)
        total += take * price
        remaining -= take
        if remaining <= fill_slack:
            return total / abs(z)
    raise InsufficientDepthError(
        f"order for {z} shares exceeds displayed {side} depth {book.depth(side)}",
        math.copysign(book.depth(side), z),
    )


def total_cost(book: BookSnapshot, z) -> float:
    """Cash paid (received) for a signed market order: z * supply_price."""
    return z * supply_price(book, z)


@dataclass(frozen=True)
class SlopeFit:
    alpha: float
    regime: str
    trade_size: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "regime": self.regime,
            "Q": self.trade_size,
            "diagnostics": self.diagnostics,
        }


def fit_alpha(book: BookSnapshot, regime=CONTINUOUS, trade_size=None,
              window_fraction=0.1, samples_per_side=25) -> SlopeFit:
    """Fit the linear supply-curve slope S(z) ~ mid * (1 + alpha * z).

    Continuous regime: least-squares line through two-sided supply samples
    within +-window_fraction of the touch depth, constrained through
    (0, mid). This smooths over the z=0 jump caused by the spread; the window
    is reported in the diagnostics since it is a modeling choice.

    Discrete regime: alpha' = (S(Q) - mid) / (mid * Q) exactly, so that
    alpha' * mid * Q reproduces the realized per-trade impact at size Q.
    """
    if not book.two_sided:
        raise DomainError("slope fitting needs both sides of the book")
    mid = book.mid
    if regime == DISCRETE:
        if trade_size is None or trade_size == 0:
            raise ConfigError("discrete regime requires a nonzero trade size Q")
        alpha = (supply_price(book, trade_size) - mid) / (mid * trade_size)
        return SlopeFit(alpha=float(alpha), regime=DISCRETE, trade_size=trade_size,
                        diagnostics={"mid": mid})
    if regime != CONTINUOUS:
        raise ConfigError(f"unknown regime {regime!r}")
    touch = min(book.asks[0][1], book.bids[0][1])
    window = window_fraction * touch
    zs = np.concatenate([-np.linspace(window / samples_per_side, window, samples_per_side)[::-1],
                         np.linspace(window / samples_per_side, window, samples_per_side)])
    prices = np.array([supply_price(book, float(z)) for z in zs])
    # least squares for S = mid + mid * alpha * z through the origin point
    alpha = float(np.sum(zs * (prices - mid)) / (mid * np.sum(zs * zs)))
    resid = prices - mid * (1.0 + alpha * zs)
    return SlopeFit(
        alpha=alpha, regime=CONTINUOUS, trade_size=None,
        diagnostics={
            "mid": mid,
            "window_shares": float(window),
            "n_samples": int(zs.size),
            "residual_rms": float(np.sqrt(np.mean(resid**2))),
            "half_spread": float(book.asks[0][0] - mid),
        },
    )


@dataclass(frozen=True)
class OrderFlowRates:
    """Poisson order-flow intensities per tick distance from the opposite quote."""

    lambdas: tuple      # limit-order arrival rate at tick i (events/time)
    mu: float           # market-order rate hitting the best quote
    thetas: tuple       # cancellation rate per outstanding order

    def __post_init__(self):
        if len(self.lambdas) != len(self.thetas):
            raise ConfigError("lambdas and thetas must have equal depth")
        if len(self.lambdas) == 0:
            raise ConfigError("need at least one tick of rates")
        if any(lam < 0 for lam in self.lambdas):
            raise DomainError("arrival rates must be nonnegative")
        if any(th <= 0 for th in self.thetas):
            raise DomainError("cancellation rates must be positive")
        if self.mu < 0:
            raise DomainError("market-order rate must be nonnegative")
        if self.lambdas[0] <= self.mu:
            raise DomainError(
                f"model requires lambda(1) > mu, got {self.lambdas[0]} <= {self.mu}; "
                "the best-quote queue would be empty in expectation"
            )


def stationary_depths(rates: OrderFlowRates) -> np.ndarray:
    """Expected outstanding orders per tick in the stationary state:
    (lambda(1) - mu) / theta(1) at the touch, lambda(i) / theta(i) behind it."""
    lam = np.array(rates.lambdas, dtype=float)
    th = np.array(rates.thetas, dtype=float)
    depths = lam / th
    depths[0] = (lam[0] - rates.mu) / th[0]
    return depths


def transient_depth(t, lambda1, mu, theta1):
    """Expected touch depth started from an empty book: the stationary value
    scaled by 1 - exp(-theta1 * t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    out = (lambda1 - mu) / theta1 * (1.0 - np.exp(-theta1 * t))
    return float(out) if out.ndim == 0 else out


def power_law_rates(k, a, depth) -> np.ndarray:
    """Arrival rates k / i^a for tick distances i = 1..depth."""
    if k <= 0:
        raise DomainError(f"power-law scale must be positive, got {k}")
    if depth < 1:
        raise ConfigError(f"depth must be >= 1, got {depth}")
    i = np.arange(1, depth + 1, dtype=float)
    return k / i**a


def fit_power_law(ticks, rates):
    """Recover (k, a) from per-tick rates by log-log least squares."""
    ticks = np.asarray(ticks, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if np.any(ticks <= 0) or np.any(rates <= 0):
        raise DomainError("power-law fit needs positive ticks and rates")
    slope, intercept = np.polyfit(np.log(ticks), np.log(rates), 1)
    return math.exp(intercept), -slope


def book_from_depths(depths, tick, mid) -> BookSnapshot:
    """Symmetric synthetic book with level i at mid +- (i - 1/2) * tick.

    Zero-depth ticks are skipped; an all-zero book is an error.
    """
    depths = np.asarray(depths, dtype=float)
    if np.any(depths < 0):
        raise DomainError("depths must be nonnegative")
    if not np.any(depths > 0):
        raise DomainError("empty book: all depths are zero")
    asks, bids = [], []
    for i, d in enumerate(depths, start=1):
        if d <= 0:
            continue
        offset = (i - 0.5) * tick
        asks.append((mid + offset, float(d)))
        bids.append((mid - offset, float(d)))
    return BookSnapshot(asks=tuple(asks), bids=tuple(bids), tick=tick)
