"""Distribution of the discrete-hedging liquidity cost by backward recursion.

The N-step cost L = sum_i slope * S_{i-1} * gamma_i^2 * (S_i - S_{i-1})^2 has
the structure of an Asian-style payoff: the expectation of (L - xi)^+ obeys a
one-step backward recursion once prices are re-denominated by the current
spot, so a surface over (strike moneyness, xi) can be rolled back from a
single-period base case. Differencing the resulting call-style value twice in
xi recovers the distribution, in the spirit of strike-space density
extraction from option prices.

All surfaces live on a fixed grid: moneyness uniform in log, xi geometric
with a leading zero. Off-grid lookups interpolate bilinearly; xi queries
below zero use the exact linear extension E[(L - xi)^+] = E[L] - xi (L >= 0),
and lookups beyond the grid edges clamp, which is benign because the surface
is flat there when the grid spans the reachable region. Each level is a
fixed-order vectorized reduction, so results do not depend on scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .bs_core import OptionSpec
from .errors import ConfigError, DomainError, NumericalError

# numpy renamed trapz -> trapezoid in 2.0
_trapezoid = getattr(np, "trapezoid", getattr(np, "trapz", None))

DEFAULT_STEPS = 50
DEFAULT_X_NODES = 200
DEFAULT_MONEYNESS_POINTS = 161
DEFAULT_XI_POINTS = 240
XI_MIN_FRACTION = 1e-4
XI_MAX_MULTIPLE = 20.0
Z_SPAN = 6.0


def _gauss_prob_nodes(n_nodes, z_span=Z_SPAN):
    """Gauss-Legendre nodes/weights for integrating against a standard normal."""
    z, w = np.polynomial.legendre.leggauss(n_nodes)
    z = z * z_span
    w = w * z_span * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return z, w / w.sum()


def _unit_gamma(strike, tau, r, sigma):
    """Gamma at spot 1 for strike(s) `strike` and time to maturity tau."""
    d1 = (-np.log(strike) + (r + 0.5 * sigma * sigma) * tau) / (sigma * math.sqrt(tau))
    return np.exp(-0.5 * d1 * d1) / (sigma * math.sqrt(2.0 * math.pi * tau))


@dataclass(frozen=True)
class DistGrid:
    """Discretization for the cost recursion (spot normalized to 1)."""

    moneyness: np.ndarray   # strictly increasing, uniform in log
    xi: np.ndarray          # starts at 0, then geometric
    x_nodes: np.ndarray     # one-step price ratios
    x_prob: np.ndarray      # quadrature mass at each ratio, sums to 1
    n_steps: int
    dt: float

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.xi[0] != 0.0 or np.any(np.diff(self.xi) <= 0):
            raise ConfigError("xi axis must start at 0 and increase strictly")
        if np.any(self.moneyness <= 0) or np.any(np.diff(self.moneyness) <= 0):
            raise ConfigError("moneyness axis must be positive and increasing")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")

    @classmethod
    def build(cls, opt: OptionSpec, r, sigma, alpha_prime,
              n_steps=DEFAULT_STEPS, n_moneyness=DEFAULT_MONEYNESS_POINTS,
              n_xi=DEFAULT_XI_POINTS, xi_max=None, n_x_nodes=DEFAULT_X_NODES,
              measure="risk_neutral", drift=None) -> "DistGrid":
        """Grid centered on opt's moneyness, sized from the expected cost.

        xi_max defaults to 20x the expected cost (computed by per-step moment
        quadrature, not simulation, so builds are deterministic). The
        moneyness span covers +-6 sigma of spot wander over the full horizon
        plus one extra step, past which clamped lookups sit in the flat tail.
        """
        if sigma <= 0:
            raise DomainError(f"recursion requires sigma > 0, got {sigma}")
        if n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
        dt = opt.maturity / n_steps
        mu = _measure_drift(r, measure, drift)
        if xi_max is None:
            mean = expected_cost_by_steps(opt, r, sigma, alpha_prime, n_steps,
                                          measure=measure, drift=drift)
            if mean <= 0:
                raise ConfigError(
                    "expected cost is zero (alpha_prime = 0?); pass xi_max explicitly"
                )
            xi_max = XI_MAX_MULTIPLE * mean
        span = Z_SPAN * sigma * (math.sqrt(opt.maturity) + math.sqrt(dt))
        n_m = int(n_moneyness) | 1  # odd, so the strike sits exactly on the grid
        log_k = math.log(opt.strike)
        moneyness = np.exp(np.linspace(log_k - span, log_k + span, n_m))
        moneyness[(n_m - 1) // 2] = opt.strike
        xi = np.concatenate([[0.0], np.geomspace(XI_MIN_FRACTION * xi_max, xi_max,
                                                 n_xi - 1)])
        z, prob = _gauss_prob_nodes(n_x_nodes)
        x_nodes = np.exp((mu - 0.5 * sigma * sigma) * dt + sigma * math.sqrt(dt) * z)
        return cls(moneyness=moneyness, xi=xi, x_nodes=x_nodes, x_prob=prob,
                   n_steps=n_steps, dt=dt)


def _measure_drift(r, measure, drift):
    if measure == "risk_neutral":
        return r
    if measure == "physical":
        if drift is None:
            raise ConfigError("physical measure requires an explicit drift")
        return drift
    raise ConfigError(f"unknown measure {measure!r}")


@dataclass(frozen=True)
class GSurface:
    """Expected clipped cost E[(remaining cost - xi)^+] on the grid, at a level
    counting the steps remaining to maturity."""

    level: int
    values: np.ndarray  # (n_moneyness, n_xi)
    grid: DistGrid

    def query(self, moneyness, xi):
        """Bilinear lookup; out-of-grid moneyness or xi is an error here
        (interior recursion lookups clamp instead, where the surface is flat)."""
        m_ax, xi_ax = self.grid.moneyness, self.grid.xi
        if not m_ax[0] <= moneyness <= m_ax[-1]:
            raise NumericalError(
                f"moneyness {moneyness} outside grid [{m_ax[0]:.4g}, {m_ax[-1]:.4g}]"
            )
        if not xi_ax[0] <= xi <= xi_ax[-1]:
            raise NumericalError(
                f"xi {xi} outside grid [{xi_ax[0]:.4g}, {xi_ax[-1]:.4g}]"
            )
        li = np.log(m_ax)
        p = (math.log(moneyness) - li[0]) / (li[1] - li[0])
        j = min(int(p), m_ax.size - 2)
        w = p - j
        row = (1.0 - w) * self.values[j] + w * self.values[j + 1]
        return float(np.interp(xi, xi_ax, row))


def step_cost(x_prev, x_next, steps_remaining, opt: OptionSpec, r, sigma,
              alpha_prime, dt):
    """One-period cost slope * x_prev * gamma^2 * (x_next - x_prev)^2, gamma
    taken at x_prev with steps_remaining * dt to maturity (first-order form,
    unlike the exact delta differences used by the simulator)."""
    if steps_remaining < 1:
        raise ConfigError(f"steps_remaining must be >= 1, got {steps_remaining}")
    x_prev = np.asarray(x_prev, dtype=float)
    if np.any(x_prev <= 0) or np.any(np.asarray(x_next) <= 0):
        raise DomainError("prices must be positive")
    tau = steps_remaining * dt
    d1 = (np.log(x_prev / opt.strike) + (r + 0.5 * sigma * sigma) * tau) / (
        sigma * math.sqrt(tau))
    gamma = np.exp(-0.5 * d1 * d1) / (x_prev * sigma * math.sqrt(2.0 * math.pi * tau))
    out = alpha_prime * x_prev * np.square(gamma) * np.square(
        np.asarray(x_next, dtype=float) - x_prev)
    return float(out) if out.ndim == 0 else out


def _shift_rows_cubic(g, shift):
    """Resample rows of g at fractional positions j + shift (Catmull-Rom).

    The fractional part is shared by every row, so the resample reduces to
    four clipped row gathers with scalar weights. Edge rows clamp, where the
    surface is flat by construction.
    """
    n = g.shape[0]
    base = math.floor(shift)
    t = shift - base
    t2, t3 = t * t, t * t * t
    w0 = 0.5 * (-t3 + 2.0 * t2 - t)
    w1 = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w2 = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w3 = 0.5 * (t3 - t2)
    rows = np.arange(n) + base
    i0 = np.clip(rows - 1, 0, n - 1)
    i1 = np.clip(rows, 0, n - 1)
    i2 = np.clip(rows + 1, 0, n - 1)
    i3 = np.clip(rows + 2, 0, n - 1)
    return w0 * g[i0] + w1 * g[i1] + w2 * g[i2] + w3 * g[i3]


def terminal_surface(grid: DistGrid, opt: OptionSpec, r, sigma, alpha_prime) -> GSurface:
    """Single-period base case: expectation of (step cost - xi)^+ over one move."""
    gam = _unit_gamma(grid.moneyness, grid.dt, r, sigma)
    cost = alpha_prime * np.square(gam)[:, None] * np.square(grid.x_nodes - 1.0)[None, :]
    # (n_m, n_nodes, n_xi) would be large; integrate node-by-node instead
    values = np.zeros((grid.moneyness.size, grid.xi.size))
    for i, (x, p) in enumerate(zip(grid.x_nodes, grid.x_prob)):
        values += p * np.maximum(cost[:, i][:, None] - grid.xi[None, :], 0.0)
    return GSurface(level=1, values=values, grid=grid)


def recurse_level(g_next: GSurface, opt: OptionSpec, r, sigma, alpha_prime) -> GSurface:
    """Roll the surface back one step: level m from level m-1.

    For each price-ratio node x the new value integrates
    x * g_{m-1}(K/x, (xi - l(K, x)) / x), where l is the step cost with m
    steps remaining. Moneyness lookups are a uniform shift in log space;
    negative rescaled xi uses the linear extension, xi beyond the grid clamps.
    """
    grid = g_next.grid
    m = g_next.level + 1
    if m > grid.n_steps:
        raise ConfigError(f"level {m} exceeds configured n_steps {grid.n_steps}")
    log_h = math.log(grid.moneyness[1]) - math.log(grid.moneyness[0])
    n_m, n_xi = grid.moneyness.size, grid.xi.size
    rows = np.arange(n_m)
    gam = _unit_gamma(grid.moneyness, m * grid.dt, r, sigma)
    c = alpha_prime * np.square(gam)  # per-moneyness cost coefficient
    values = np.zeros((n_m, n_xi))
    g = g_next.values
    for x, p in zip(grid.x_nodes, grid.x_prob):
        # moneyness query K_j / x is a uniform shift in log space, so a cubic
        # resample costs four row gathers with scalar weights; linear mixing
        # here biases the surface low enough to matter after ~50 levels
        mixed = _shift_rows_cubic(g, -math.log(x) / log_h)
        zeta = (grid.xi[None, :] - (c * (x - 1.0) ** 2)[:, None]) / x
        q = np.clip(np.searchsorted(grid.xi, zeta, side="right") - 1, 0, n_xi - 2)
        x0 = grid.xi[q]
        t = np.clip((zeta - x0) / (grid.xi[q + 1] - x0), 0.0, 1.0)
        lo = mixed[rows[:, None], q]
        val = lo + t * (mixed[rows[:, None], q + 1] - lo)
        neg = zeta < 0.0
        if neg.any():
            val = np.where(neg, mixed[:, :1] - zeta, val)
        values += (p * x) * val
    np.maximum(values, 0.0, out=values)
    return GSurface(level=m, values=values, grid=grid)


def compute_surface(grid: DistGrid, opt: OptionSpec, r, sigma, alpha_prime) -> GSurface:
    """Roll back from the single-period base case to the full n_steps surface."""
    surface = terminal_surface(grid, opt, r, sigma, alpha_prime)
    for _ in range(grid.n_steps - 1):
        surface = recurse_level(surface, opt, r, sigma, alpha_prime)
    return surface


def expected_cost_by_steps(opt: OptionSpec, r, sigma, alpha_prime, n_steps,
                           measure="risk_neutral", drift=None, n_nodes=400):
    """Expected total cost by summing per-step moments: each step contributes
    slope * E[(R-1)^2] * E[S^3 gamma^2] with the spot integrated against its
    lognormal marginal. Independent of the recursion; used to size xi grids
    and as a cross-check on the surface at xi=0."""
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    dt = opt.maturity / n_steps
    mu = _measure_drift(r, measure, drift)
    v = math.exp((2.0 * mu + sigma * sigma) * dt) - 2.0 * math.exp(mu * dt) + 1.0
    z, prob = _gauss_prob_nodes(n_nodes, z_span=8.0)
    total = 0.0
    for i in range(1, n_steps + 1):
        t_prev = (i - 1) * dt
        tau = (n_steps - i + 1) * dt
        if t_prev == 0.0:
            s = np.array([1.0])
            w = np.array([1.0])
        else:
            s = np.exp((mu - 0.5 * sigma * sigma) * t_prev
                       + sigma * math.sqrt(t_prev) * z)
            w = prob
        d1 = (np.log(s / opt.strike) + (r + 0.5 * sigma * sigma) * tau) / (
            sigma * math.sqrt(tau))
        gamma = np.exp(-0.5 * d1 * d1) / (s * sigma * math.sqrt(2.0 * math.pi * tau))
        total += float(np.sum(w * s**3 * np.square(gamma)))
    return alpha_prime * v * total


@dataclass(frozen=True)
class CostDistribution:
    xi: np.ndarray
    cdf: np.ndarray
    density: np.ndarray
    mean: float
    mass: float  # density mass before renormalization

    def to_rows(self):
        return [
            {"xi": float(x), "cdf": float(c), "density": float(d)}
            for x, c, d in zip(self.xi, self.cdf, self.density)
        ]


def extract_distribution(surface: GSurface, moneyness=None) -> CostDistribution:
    """Differentiate the clipped-cost value twice in xi to recover CDF/density.

    CDF = 1 + dg/dxi, density = d2g/dxi2 (nonuniform central differences),
    density clipped at zero and renormalized; a mass defect of 1% or more is
    a grid-resolution error. The mean is read off exactly as g(xi=0).
    """
    grid = surface.grid
    if moneyness is None:
        row = surface.values[(grid.moneyness.size - 1) // 2]
    else:
        idx = int(np.argmin(np.abs(np.log(grid.moneyness) - math.log(moneyness))))
        if not math.isclose(grid.moneyness[idx], moneyness, rel_tol=1e-9):
            raise ConfigError(
                f"moneyness {moneyness} is not a grid point; nearest is "
                f"{grid.moneyness[idx]:.6g}"
            )
        row = surface.values[idx]
    cdf = 1.0 + np.gradient(row, grid.xi)
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))  # absorb gradient noise
    density = np.gradient(cdf, grid.xi)
    np.maximum(density, 0.0, out=density)
    mass = float(_trapezoid(density, grid.xi))
    if abs(mass - 1.0) >= 0.01:
        raise NumericalError(
            f"density mass {mass:.4f} deviates from 1 by >= 1%; refine the xi "
            "grid (more points or larger xi_max)"
        )
    return CostDistribution(xi=grid.xi.copy(), cdf=cdf, density=density / mass,
                            mean=float(row[0]), mass=mass)


def cost_distribution(opt: OptionSpec, r, sigma, alpha_prime,
                      n_steps=DEFAULT_STEPS, grid: DistGrid | None = None,
                      measure="risk_neutral", drift=None) -> CostDistribution:
    """End-to-end driver: build grid, roll back, extract the distribution.

    opt.strike is interpreted as moneyness (spot normalized to 1).
    """
    if grid is None:
        grid = DistGrid.build(opt, r, sigma, alpha_prime, n_steps=n_steps,
                              measure=measure, drift=drift)
    surface = compute_surface(grid, opt, r, sigma, alpha_prime)
    return extract_distribution(surface, moneyness=opt.strike)
