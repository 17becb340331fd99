"""Pydantic request/response models for the service layer.

These are the wire contracts; core modules speak plain dataclasses. Every
response echoes the resolved request under `config` for provenance.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .bs_core import MarketParams, OptionSpec
from .errors import ConfigError
from .hedge_sim import HOURLY_DT, DeltaThreshold, FixedInterval
from .supply_curve import BookSnapshot


class MarketIn(BaseModel):
    spot: float = Field(1.0, gt=0)
    rate: float = 0.05
    sigma: float = Field(0.3, ge=0)

    def to_params(self) -> MarketParams:
        return MarketParams(spot=self.spot, rate=self.rate, sigma=self.sigma)


class OptionIn(BaseModel):
    strike: Optional[float] = Field(None, gt=0, description="strike in currency")
    moneyness: Optional[float] = Field(None, gt=0, description="strike / spot")
    maturity: float = Field(0.1, gt=0)
    kind: Literal["call", "put"] = "call"

    @model_validator(mode="after")
    def _one_strike_convention(self):
        if self.strike is not None and self.moneyness is not None:
            raise ValueError("give either strike or moneyness, not both")
        return self

    def resolve(self, spot: float) -> OptionSpec:
        if self.strike is not None:
            strike = self.strike
        else:
            strike = (self.moneyness if self.moneyness is not None else 1.0) * spot
        return OptionSpec(strike=strike, maturity=self.maturity, kind=self.kind)


class GridIn(BaseModel):
    t_step: float = Field(1e-4, gt=0)
    k_step: float = Field(1e-3, gt=0)
    k_min: Optional[float] = Field(None, gt=0)
    k_max: Optional[float] = None
    truncation: float = Field(0.004, gt=0, description="hedge stops this long before expiry")


class UnitCostRequest(BaseModel):
    market: MarketIn = MarketIn()
    option: OptionIn = OptionIn()
    grid: GridIn = GridIn()
    alpha: float = Field(1.0, ge=0, description="supply-curve slope")
    n_options: float = Field(1.0, ge=0)


class UnitCostResponse(BaseModel):
    I: float
    interior_term: float
    boundary_term: float
    grid: dict
    expected_cost: float
    config: UnitCostRequest


class SweepRequest(BaseModel):
    market: MarketIn = MarketIn()
    maturities: list[float]
    moneyness: list[float]
    kind: Literal["call", "put"] = "call"
    grid: GridIn = GridIn()
    alpha: float = Field(1.0, ge=0)
    n_options: float = Field(1.0, ge=0)


class SweepRow(BaseModel):
    maturity: float
    moneyness: float
    I: float
    interior_term: float
    boundary_term: float
    expected_cost: float


class SweepResponse(BaseModel):
    rows: list[SweepRow]
    config: SweepRequest


class PolicyIn(BaseModel):
    variant: Literal["hourly", "interval", "threshold"] = "hourly"
    dt: Optional[float] = Field(None, gt=0, description="interval variant only")
    gamma_costs: bool = False
    delta_threshold: float = Field(0.05, gt=0, lt=1)
    monitor_dt: Optional[float] = Field(None, gt=0)
    trade_mode: Literal["rebalance", "fixed_chunk"] = "rebalance"

    def resolve(self):
        if self.variant == "hourly":
            return FixedInterval(dt=HOURLY_DT, gamma_costs=self.gamma_costs)
        if self.variant == "interval":
            if self.dt is None:
                raise ConfigError("interval policy requires dt")
            return FixedInterval(dt=self.dt, gamma_costs=self.gamma_costs)
        return DeltaThreshold(
            delta_threshold=self.delta_threshold,
            monitor_dt=self.monitor_dt if self.monitor_dt is not None else HOURLY_DT / 10.0,
            trade_mode=self.trade_mode,
        )


class SimulateRequest(BaseModel):
    market: MarketIn = MarketIn()
    option: OptionIn = OptionIn()
    policy: PolicyIn = PolicyIn()
    n_paths: int = Field(10_000, ge=1)
    seed: int = 0
    alpha: float = Field(1.0, ge=0)
    n_options: float = Field(1.0, ge=0)
    stop_time: Optional[float] = Field(None, gt=0)
    drift: Optional[float] = None
    threads: int = Field(1, ge=1)


class SimulateResponse(BaseModel):
    mean: float
    sd: float
    ci99: float
    n_paths: int
    policy: dict
    seed: int
    config: SimulateRequest


class DistributionRequest(BaseModel):
    market: MarketIn = MarketIn()
    option: OptionIn = OptionIn()
    alpha: float = Field(1.0, ge=0)
    n_steps: int = Field(50, ge=1)
    n_moneyness: int = Field(161, ge=11)
    n_xi: int = Field(240, ge=16)
    xi_max: Optional[float] = Field(None, gt=0)
    measure: Literal["risk_neutral", "physical"] = "risk_neutral"
    drift: Optional[float] = None
    mc_overlay: bool = False
    mc_paths: int = Field(100_000, ge=1)
    mc_seed: int = 0


class DistributionResponse(BaseModel):
    xi: list[float]
    cdf: list[float]
    density: list[float]
    mean: float
    mass: float
    mc_cdf: Optional[list[float]] = None
    mc_density: Optional[list[float]] = None
    config: DistributionRequest


class BookIn(BaseModel):
    asks: list[tuple[float, float]] = Field(default_factory=list)
    bids: list[tuple[float, float]] = Field(default_factory=list)
    tick: Optional[float] = Field(None, gt=0)

    def to_snapshot(self) -> BookSnapshot:
        asks = sorted(self.asks, key=lambda lvl: lvl[0])
        bids = sorted(self.bids, key=lambda lvl: -lvl[0])
        tick = self.tick
        if tick is None:
            prices = sorted({p for p, _ in asks} | {p for p, _ in bids})
            if len(prices) < 2:
                raise ConfigError("cannot infer tick from a one-price book; pass tick")
            tick = min(round(b - a, 12) for a, b in zip(prices, prices[1:]))
        return BookSnapshot(asks=tuple(asks), bids=tuple(bids), tick=tick)


class FitRequest(BaseModel):
    book: BookIn
    regime: Literal["continuous", "discrete"] = "continuous"
    trade_size: Optional[float] = None
    window_fraction: float = Field(0.1, gt=0)
    samples_per_side: int = Field(25, ge=2)


class FitResponse(BaseModel):
    alpha: float
    regime: str
    Q: Optional[float]
    diagnostics: dict
    config: Optional[FitRequest] = None


class EvalRequest(BaseModel):
    book: BookIn
    z: float = Field(description="signed order size; positive buys")


class EvalResponse(BaseModel):
    price: float
    total_cost: float
    config: EvalRequest


class StationaryRequest(BaseModel):
    depth: int = Field(1, ge=1)
    mu: float = Field(0.0, ge=0)
    lambdas: Optional[list[float]] = None
    lambda1: Optional[float] = None
    power_k: Optional[float] = Field(None, gt=0)
    power_a: Optional[float] = None
    theta1: Optional[float] = Field(None, gt=0)
    thetas: Optional[list[float]] = None
    tick: float = Field(0.01, gt=0)
    mid: float = Field(30.0, gt=0)
    fit_synthetic: bool = True

    def resolve_rates(self) -> tuple[tuple, tuple]:
        if self.lambdas is not None:
            lams = tuple(self.lambdas)
        elif self.power_k is not None:
            if self.power_a is None:
                raise ConfigError("power-law rates need both power_k and power_a")
            i = range(1, self.depth + 1)
            lams = tuple(self.power_k / n**self.power_a for n in i)
        elif self.lambda1 is not None:
            if self.depth != 1:
                raise ConfigError("lambda1 alone only specifies a depth-1 book")
            lams = (self.lambda1,)
        else:
            raise ConfigError("give lambdas, lambda1, or (power_k, power_a)")
        if len(lams) != self.depth:
            raise ConfigError(f"need {self.depth} arrival rates, got {len(lams)}")
        if self.thetas is not None:
            ths = tuple(self.thetas)
        elif self.theta1 is not None:
            ths = (self.theta1,) * self.depth
        else:
            raise ConfigError("give thetas or theta1")
        if len(ths) != self.depth:
            raise ConfigError(f"need {self.depth} cancel rates, got {len(ths)}")
        return lams, ths


class DepthRow(BaseModel):
    tick: int
    depth: float


class StationaryResponse(BaseModel):
    depths: list[DepthRow]
    fit: Optional[FitResponse] = None
    config: StationaryRequest


class HealthResponse(BaseModel):
    status: str
    version: str
