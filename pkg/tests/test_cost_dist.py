"""Recursion tests: brute-force nested quadrature, independent moment oracle,
surface shape invariants, and the exact slope-scaling identity."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from liqcost.bs_core import OptionSpec, bs_gamma
from liqcost.cost_dist import (
    DistGrid,
    compute_surface,
    cost_distribution,
    expected_cost_by_steps,
    extract_distribution,
    recurse_level,
    step_cost,
    terminal_surface,
    _gauss_prob_nodes,
    _unit_gamma,
)
from liqcost.errors import ConfigError, DomainError, NumericalError

R = 0.05


def small_grid(opt, sigma, alpha, n_steps, **kw):
    kw.setdefault("n_moneyness", 161)
    kw.setdefault("n_xi", 200)
    return DistGrid.build(opt, R, sigma, alpha, n_steps=n_steps, **kw)


def test_step_cost_zero_for_flat_move_and_zero_slope():
    opt = OptionSpec(strike=1.0, maturity=0.1)
    assert step_cost(1.0, 1.0, 3, opt, R, 0.3, 1.0, 0.002) == 0.0
    assert step_cost(1.0, 1.1, 3, opt, R, 0.3, 0.0, 0.002) == 0.0


def test_step_cost_matches_hand_evaluation():
    opt = OptionSpec(strike=1.05, maturity=0.1)
    dt, steps, alpha = 0.002, 4, 0.8
    x_prev, x_next = 0.98, 1.03
    gamma = bs_gamma(opt.maturity - steps * dt, x_prev, opt, R, 0.3)
    hand = alpha * x_prev * gamma**2 * (x_next - x_prev) ** 2
    assert step_cost(x_prev, x_next, steps, opt, R, 0.3, alpha, dt) == pytest.approx(
        hand, rel=1e-12)


def test_terminal_surface_base_case_properties():
    sigma, alpha = 0.8, 1.0
    opt = OptionSpec(strike=1.0, maturity=0.1)
    grid = small_grid(opt, sigma, alpha, n_steps=50)
    surf = terminal_surface(grid, opt, R, sigma, alpha)
    assert surf.level == 1
    assert np.all(surf.values >= 0)
    # xi_max sits at 20x the mean: only the extreme quadrature nodes survive
    # the clip there, worth ~1e-8 of mass
    assert np.all(surf.values[:, -1] <= surf.values[:, 0])
    assert surf.values[(grid.moneyness.size - 1) // 2, -1] < 1e-6


def test_terminal_surface_at_zero_xi_matches_independent_quadrature():
    sigma, alpha = 0.8, 1.0
    opt = OptionSpec(strike=1.0, maturity=0.1)
    grid = small_grid(opt, sigma, alpha, n_steps=50)
    dt = grid.dt
    surf = terminal_surface(grid, opt, R, sigma, alpha)
    k = 1.0
    gam = _unit_gamma(np.array([k]), dt, R, sigma)[0]
    mu_log = (R - sigma**2 / 2) * dt
    sd_log = sigma * math.sqrt(dt)

    def integrand(x):
        pdf = math.exp(-((math.log(x) - mu_log) ** 2) / (2 * sd_log**2)) / (
            x * sd_log * math.sqrt(2 * math.pi))
        return alpha * gam**2 * (x - 1.0) ** 2 * pdf

    oracle, err = quad(integrand, math.exp(mu_log - 9 * sd_log),
                       math.exp(mu_log + 9 * sd_log), limit=200)
    center = (grid.moneyness.size - 1) // 2
    assert surf.values[center, 0] == pytest.approx(oracle, rel=1e-6)


def test_single_step_surface_equals_terminal():
    sigma, alpha = 0.4, 1.0
    opt = OptionSpec(strike=1.1, maturity=0.05)
    grid = small_grid(opt, sigma, alpha, n_steps=1)
    assert np.array_equal(compute_surface(grid, opt, R, sigma, alpha).values,
                          terminal_surface(grid, opt, R, sigma, alpha).values)


def test_two_step_recursion_matches_brute_force_quadrature():
    sigma, alpha, T, N = 0.8, 1.0, 0.1, 2
    opt = OptionSpec(strike=1.0, maturity=T)
    dt = T / N
    grid = DistGrid.build(opt, R, sigma, alpha, n_steps=N, n_moneyness=401, n_xi=400)
    surf = compute_surface(grid, opt, R, sigma, alpha)

    z, prob = _gauss_prob_nodes(200)
    x1 = np.exp((R - 0.5 * sigma**2) * dt + sigma * math.sqrt(dt) * z)
    u = x1.copy()
    w2 = prob[:, None] * prob[None, :]
    d1 = (np.log(x1 / opt.strike) + (R + 0.5 * sigma**2) * dt) / (
        sigma * math.sqrt(dt))
    gam1 = np.exp(-0.5 * d1 * d1) / (x1 * sigma * math.sqrt(2 * math.pi * dt))
    g2 = _unit_gamma(np.array([opt.strike]), 2 * dt, R, sigma)[0]
    total = (alpha * g2**2 * (x1 - 1.0) ** 2)[:, None] + alpha * (
        x1**3 * gam1**2)[:, None] * ((u - 1.0) ** 2)[None, :]

    center = (grid.moneyness.size - 1) // 2
    for q in range(0, grid.xi.size, grid.xi.size // 20):
        brute = float(np.sum(w2 * np.maximum(total - grid.xi[q], 0.0)))
        assert surf.values[center, q] == pytest.approx(brute, abs=1e-4)


def test_surfaces_are_monotone_and_convex_in_xi():
    sigma, alpha = 0.8, 1.0
    opt = OptionSpec(strike=1.0, maturity=0.1)
    grid = small_grid(opt, sigma, alpha, n_steps=10)
    surf = compute_surface(grid, opt, R, sigma, alpha)
    diffs = np.diff(surf.values, axis=1)
    assert np.all(diffs <= 1e-8)
    slopes = diffs / np.diff(grid.xi)[None, :]
    assert np.all(np.diff(slopes, axis=1) >= -1e-8)


def test_mean_identity_against_moment_quadrature():
    sigma, alpha, N = 0.8, 1.0, 50
    opt = OptionSpec(strike=1.0, maturity=0.1)
    grid = small_grid(opt, sigma, alpha, n_steps=N)
    surf = compute_surface(grid, opt, R, sigma, alpha)
    center = (grid.moneyness.size - 1) // 2
    mean = expected_cost_by_steps(opt, R, sigma, alpha, N)
    assert surf.values[center, 0] == pytest.approx(mean, rel=2e-3)


def test_slope_scaling_identity_is_exact_for_binary_factors():
    sigma, N = 0.4, 6
    opt = OptionSpec(strike=1.0, maturity=0.06)
    g1 = DistGrid.build(opt, R, sigma, 1.0, n_steps=N, n_moneyness=81, n_xi=60,
                        xi_max=0.5)
    g2 = DistGrid(moneyness=g1.moneyness, xi=2.0 * g1.xi, x_nodes=g1.x_nodes,
                  x_prob=g1.x_prob, n_steps=N, dt=g1.dt)
    s1 = compute_surface(g1, opt, R, sigma, 1.0)
    s2 = compute_surface(g2, opt, R, sigma, 2.0)
    assert np.array_equal(s2.values, 2.0 * s1.values)


def test_extracted_distribution_shape_and_mean():
    sigma, alpha, N = 0.8, 1.0, 50
    opt = OptionSpec(strike=1.0, maturity=0.1)
    dist = cost_distribution(opt, R, sigma, alpha, n_steps=N)
    assert 0.99 < dist.mass < 1.01
    assert np.all(np.diff(dist.cdf) >= -1e-9)
    assert dist.cdf[0] == pytest.approx(0.0, abs=5e-3)
    assert dist.cdf[-1] == pytest.approx(1.0, abs=5e-3)
    assert np.all(dist.density >= 0)
    trapezoid = getattr(np, 'trapezoid', None) or np.trapz
    mean_from_density = float(trapezoid(dist.density * dist.xi, dist.xi))
    assert mean_from_density == pytest.approx(dist.mean, rel=0.01)


def test_distribution_tracks_monte_carlo_ks():
    from liqcost.bs_core import MarketParams
    from liqcost.hedge_sim import FixedInterval, SimConfig, estimate_unit_cost_mc

    sigma, alpha, T, N = 0.8, 1.0, 0.1, 50
    opt = OptionSpec(strike=1.0, maturity=T)
    dist = cost_distribution(opt, R, sigma, alpha, n_steps=N,
                             grid=small_grid(opt, sigma, alpha, N,
                                             n_moneyness=121, n_x_nodes=150))
    mkt = MarketParams(spot=1.0, rate=R, sigma=sigma)
    sim = estimate_unit_cost_mc(
        opt, mkt,
        SimConfig(n_paths=20_000, seed=21, stop_time=T, keep_path_costs=True,
                  policy=FixedInterval(dt=T / N, gamma_costs=True), block_size=4096))
    samples = np.sort(sim.path_costs)
    n = samples.size
    theo = np.interp(samples, dist.xi, dist.cdf)
    ks = max(np.max(np.abs(theo - np.arange(1, n + 1) / n)),
             np.max(np.abs(theo - np.arange(n) / n)))
    assert ks < 0.02
    assert abs(dist.mean - sim.mean) < sim.ci99


def test_physical_measure_with_rate_drift_matches_risk_neutral():
    sigma, alpha, N = 0.5, 1.0, 5
    opt = OptionSpec(strike=1.0, maturity=0.05)
    rn = expected_cost_by_steps(opt, R, sigma, alpha, N)
    phys_same = expected_cost_by_steps(opt, R, sigma, alpha, N, measure="physical",
                                       drift=R)
    phys_up = expected_cost_by_steps(opt, R, sigma, alpha, N, measure="physical",
                                     drift=0.3)
    assert rn == phys_same
    assert phys_up != rn
    with pytest.raises(ConfigError):
        expected_cost_by_steps(opt, R, sigma, alpha, N, measure="physical")


def test_surface_query_bounds_and_interior():
    sigma, alpha = 0.4, 1.0
    opt = OptionSpec(strike=1.0, maturity=0.05)
    grid = small_grid(opt, sigma, alpha, n_steps=2)
    surf = compute_surface(grid, opt, R, sigma, alpha)
    center = (grid.moneyness.size - 1) // 2
    assert surf.query(1.0, float(grid.xi[3])) == pytest.approx(
        float(surf.values[center, 3]), rel=1e-12)
    with pytest.raises(NumericalError):
        surf.query(float(grid.moneyness[-1]) * 1.5, 0.0)
    with pytest.raises(NumericalError):
        surf.query(1.0, float(grid.xi[-1]) * 2.0)


def test_mass_defect_raises_with_refinement_hint():
    sigma, alpha = 0.8, 1.0
    opt = OptionSpec(strike=1.0, maturity=0.1)
    # deliberately truncate the xi axis far below the distribution's support
    grid = DistGrid.build(opt, R, sigma, alpha, n_steps=10, n_moneyness=81,
                          n_xi=40, xi_max=0.01)
    surf = compute_surface(grid, opt, R, sigma, alpha)
    with pytest.raises(NumericalError, match="refine"):
        extract_distribution(surf)


def test_grid_validation():
    opt = OptionSpec(strike=1.0, maturity=0.1)
    with pytest.raises(DomainError):
        DistGrid.build(opt, R, 0.0, 1.0, n_steps=5)
    with pytest.raises(ConfigError):
        DistGrid.build(opt, R, 0.3, 0.0, n_steps=5)  # zero slope, no xi_max
    with pytest.raises(ConfigError):
        DistGrid.build(opt, R, 0.3, 1.0, n_steps=0)


def test_zero_slope_surfaces_are_identically_zero():
    sigma = 0.3
    opt = OptionSpec(strike=1.0, maturity=0.1)
    grid = DistGrid.build(opt, R, sigma, 0.0, n_steps=3, n_moneyness=41, n_xi=30,
                          xi_max=1.0)
    surf = compute_surface(grid, opt, R, sigma, 0.0)
    assert np.all(surf.values[:, 1:] == 0.0)  # (0 - xi)^+ = 0 for xi > 0
    assert np.all(surf.values[:, 0] == 0.0)


def test_recursion_mean_tracks_unit_cost_quadrature():
    # the left-sampled N-step cost behaves like the continuous-cost integral
    # truncated half a step before expiry; the two agree to a couple percent
    from liqcost.unit_cost import QuadratureGrid, unit_liquidity_cost

    sigma, alpha, T, N = 0.8, 1.0, 0.1, 50
    opt = OptionSpec(strike=1.0, maturity=T)
    grid = small_grid(opt, sigma, alpha, n_steps=N, n_moneyness=121, n_x_nodes=150)
    surf = compute_surface(grid, opt, R, sigma, alpha)
    mean = surf.values[(grid.moneyness.size - 1) // 2, 0]
    half_step = unit_liquidity_cost(
        opt, R, sigma, grid=QuadratureGrid(t_max=T - grid.dt / 2))
    assert mean == pytest.approx(half_step.I, rel=0.02)
