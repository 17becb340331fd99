"""FastAPI service wrapping the core package.

Each endpoint delegates to a plain handler function; the CLI calls the same
handlers in-process, so service and CLI cannot drift apart. Domain/config
errors map to 400, numerical errors (insufficient depth, unstable grids)
to 422 with a structured payload.
"""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, cost_dist, hedge_sim, supply_curve, unit_cost
from .bs_core import OptionSpec
from .errors import ConfigError, DomainError, InsufficientDepthError, NumericalError
from .schemas import (
    DepthRow,
    DistributionRequest,
    DistributionResponse,
    EvalRequest,
    EvalResponse,
    FitRequest,
    FitResponse,
    HealthResponse,
    SimulateRequest,
    SimulateResponse,
    StationaryRequest,
    StationaryResponse,
    SweepRequest,
    SweepResponse,
    SweepRow,
    UnitCostRequest,
    UnitCostResponse,
)


def _resolve_grid(grid_in, opt: OptionSpec, sigma: float) -> unit_cost.QuadratureGrid:
    t_max = opt.maturity - grid_in.truncation
    if t_max <= 0:
        raise ConfigError(
            f"truncation {grid_in.truncation} >= maturity {opt.maturity}"
        )
    if grid_in.k_min is not None or grid_in.k_max is not None:
        if grid_in.k_min is None or grid_in.k_max is None:
            raise ConfigError("give both k_min and k_max or neither")
        return unit_cost.QuadratureGrid(
            t_max=t_max, t_step=grid_in.t_step,
            k_min=grid_in.k_min, k_max=grid_in.k_max, k_step=grid_in.k_step,
        )
    return unit_cost.QuadratureGrid.for_option(
        opt, sigma, t_step=grid_in.t_step, k_step=grid_in.k_step,
        truncation=grid_in.truncation,
    )


def handle_unitcost(req: UnitCostRequest) -> UnitCostResponse:
    market = req.market.to_params()
    opt = req.option.resolve(market.spot)
    norm = OptionSpec(strike=opt.strike / market.spot, maturity=opt.maturity,
                      kind=opt.kind)
    grid = _resolve_grid(req.grid, norm, market.sigma)
    result = unit_cost.unit_liquidity_cost(norm, market.rate, market.sigma, grid=grid)
    cost = unit_cost.expected_liquidity_cost(req.alpha, req.n_options, market.spot,
                                             result.I)
    return UnitCostResponse(
        I=result.I, interior_term=result.interior_term,
        boundary_term=result.boundary_term, grid=result.grid.to_dict(),
        expected_cost=cost, config=req,
    )


def handle_sweep(req: SweepRequest) -> SweepResponse:
    market = req.market.to_params()
    rows = unit_cost.unit_cost_sweep(
        req.maturities, req.moneyness, market.rate, market.sigma,
        t_step=req.grid.t_step, k_step=req.grid.k_step,
        truncation=req.grid.truncation, kind=req.kind,
    )
    out = [
        SweepRow(
            maturity=r["maturity"], moneyness=r["moneyness"], I=r["I"],
            interior_term=r["interior_term"], boundary_term=r["boundary_term"],
            expected_cost=unit_cost.expected_liquidity_cost(
                req.alpha, req.n_options, market.spot, r["I"]),
        )
        for r in rows
    ]
    return SweepResponse(rows=out, config=req)


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    market = req.market.to_params()
    opt = req.option.resolve(market.spot)
    config = hedge_sim.SimConfig(
        n_paths=req.n_paths, seed=req.seed, policy=req.policy.resolve(),
        stop_time=req.stop_time, alpha=req.alpha, n_options=req.n_options,
        drift=req.drift, n_threads=req.threads,
    )
    result = hedge_sim.estimate_unit_cost_mc(opt, market, config)
    return SimulateResponse(
        mean=result.mean, sd=result.sd, ci99=result.ci99, n_paths=result.n_paths,
        policy=result.policy, seed=result.seed, config=req,
    )


def _degenerate_distribution(req: DistributionRequest) -> DistributionResponse:
    # zero slope: all paths cost 0, the CDF is a step at 0
    xi = [0.0, 1.0]
    return DistributionResponse(xi=xi, cdf=[1.0, 1.0], density=[0.0, 0.0],
                                mean=0.0, mass=1.0, config=req)


def handle_distribution(req: DistributionRequest) -> DistributionResponse:
    market = req.market.to_params()
    opt = req.option.resolve(market.spot)
    norm = OptionSpec(strike=opt.strike / market.spot, maturity=opt.maturity,
                      kind=opt.kind)
    if req.alpha == 0:
        return _degenerate_distribution(req)
    # the recursion runs spot-normalized; costs scale linearly with spot
    unit_alpha = 1.0
    grid = cost_dist.DistGrid.build(
        norm, market.rate, market.sigma, unit_alpha, n_steps=req.n_steps,
        n_moneyness=req.n_moneyness, n_xi=req.n_xi,
        xi_max=None if req.xi_max is None else req.xi_max / (req.alpha * market.spot),
        measure=req.measure, drift=req.drift,
    )
    surface = cost_dist.compute_surface(grid, norm, market.rate, market.sigma,
                                        unit_alpha)
    dist = cost_dist.extract_distribution(surface, moneyness=norm.strike)
    scale = req.alpha * market.spot
    xi = dist.xi * scale
    density = dist.density / scale
    resp = DistributionResponse(
        xi=[float(v) for v in xi], cdf=[float(v) for v in dist.cdf],
        density=[float(v) for v in density], mean=dist.mean * scale,
        mass=dist.mass, config=req,
    )
    if req.mc_overlay:
        sim = hedge_sim.estimate_unit_cost_mc(
            opt, market,
            hedge_sim.SimConfig(
                n_paths=req.mc_paths, seed=req.mc_seed,
                policy=hedge_sim.FixedInterval(dt=opt.maturity / req.n_steps,
                                               gamma_costs=True),
                stop_time=opt.maturity, alpha=req.alpha, keep_path_costs=True,
                block_size=4096,
            ),
        )
        samples = np.sort(sim.path_costs)
        ecdf = np.searchsorted(samples, xi, side="right") / samples.size
        hist, _ = np.histogram(samples, bins=np.asarray(xi))
        width = np.diff(np.asarray(xi))
        mc_density = hist / (samples.size * np.where(width > 0, width, 1.0))
        resp.mc_cdf = [float(v) for v in ecdf]
        resp.mc_density = [float(v) for v in mc_density] + [0.0]
    return resp


def handle_fit(req: FitRequest) -> FitResponse:
    book = req.book.to_snapshot()
    fit = supply_curve.fit_alpha(
        book, regime=req.regime, trade_size=req.trade_size,
        window_fraction=req.window_fraction, samples_per_side=req.samples_per_side,
    )
    return FitResponse(alpha=fit.alpha, regime=fit.regime, Q=fit.trade_size,
                       diagnostics=fit.diagnostics, config=req)


def handle_eval(req: EvalRequest) -> EvalResponse:
    book = req.book.to_snapshot()
    price = supply_curve.supply_price(book, req.z)
    return EvalResponse(price=price, total_cost=req.z * price, config=req)


def handle_stationary(req: StationaryRequest) -> StationaryResponse:
    lams, ths = req.resolve_rates()
    rates = supply_curve.OrderFlowRates(lambdas=lams, mu=req.mu, thetas=ths)
    depths = supply_curve.stationary_depths(rates)
    fit = None
    if req.fit_synthetic and np.any(depths > 0):
        book = supply_curve.book_from_depths(depths, req.tick, req.mid)
        f = supply_curve.fit_alpha(book)
        fit = FitResponse(alpha=f.alpha, regime=f.regime, Q=f.trade_size,
                          diagnostics=f.diagnostics)
    return StationaryResponse(
        depths=[DepthRow(tick=i + 1, depth=float(d)) for i, d in enumerate(depths)],
        fit=fit, config=req,
    )


app = FastAPI(title="liqcost", version=__version__,
              description="Delta-hedging liquidity costs against a supply curve")


@app.exception_handler(DomainError)
@app.exception_handler(ConfigError)
async def _config_error(request: Request, exc):
    return JSONResponse(status_code=400, content={
        "detail": {"type": type(exc).__name__, "message": str(exc)}})


@app.exception_handler(NumericalError)
async def _numerical_error(request: Request, exc):
    detail = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, InsufficientDepthError):
        detail["max_fillable"] = exc.max_fillable
    return JSONResponse(status_code=422, content={"detail": detail})


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post("/unitcost", response_model=UnitCostResponse)
def unitcost(req: UnitCostRequest):
    return handle_unitcost(req)


@app.post("/unitcost/sweep", response_model=SweepResponse)
def unitcost_sweep(req: SweepRequest):
    return handle_sweep(req)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest):
    return handle_simulate(req)


@app.post("/distribution", response_model=DistributionResponse)
def distribution(req: DistributionRequest):
    return handle_distribution(req)


@app.post("/supplycurve/fit", response_model=FitResponse)
def supplycurve_fit(req: FitRequest):
    return handle_fit(req)


@app.post("/supplycurve/eval", response_model=EvalResponse)
def supplycurve_eval(req: EvalRequest):
    return handle_eval(req)


@app.post("/supplycurve/stationary", response_model=StationaryResponse)
def supplycurve_stationary(req: StationaryRequest):
    return handle_stationary(req)
