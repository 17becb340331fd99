"""Command-line client for the liquidity-cost service.

Each subcommand builds the same pydantic request the HTTP API accepts and
either calls the handler in-process (default) or POSTs it to a running
server (--server). All times are in years: day = 1/252, hour = 1/(252*6.5).

Exit codes: 0 success, 2 configuration error, 3 numerical/depth error.
"""
from __future__ import annotations

import argparse
import json
import sys

from pydantic import ValidationError

from . import __version__, service
from .errors import ConfigError, DomainError, NumericalError
from .schemas import (
    BookIn,
    DistributionRequest,
    EvalRequest,
    FitRequest,
    GridIn,
    MarketIn,
    OptionIn,
    PolicyIn,
    SimulateRequest,
    StationaryRequest,
    SweepRequest,
    UnitCostRequest,
)
from .supply_curve import load_book_csv

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

ENDPOINTS = {
    UnitCostRequest: ("/unitcost", service.handle_unitcost),
    SweepRequest: ("/unitcost/sweep", service.handle_sweep),
    SimulateRequest: ("/simulate", service.handle_simulate),
    DistributionRequest: ("/distribution", service.handle_distribution),
    FitRequest: ("/supplycurve/fit", service.handle_fit),
    EvalRequest: ("/supplycurve/eval", service.handle_eval),
    StationaryRequest: ("/supplycurve/stationary", service.handle_stationary),
}


def _dispatch(req, server):
    path, handler = ENDPOINTS[type(req)]
    if server is None:
        return handler(req).model_dump()
    import httpx

    resp = httpx.post(server.rstrip("/") + path,
                      json=json.loads(req.model_dump_json()), timeout=None)
    if resp.status_code >= 400:
        detail = resp.json().get("detail", resp.text)
        message = detail.get("message", str(detail)) if isinstance(detail, dict) else str(detail)
        if resp.status_code == 422:
            raise NumericalError(message)
        raise ConfigError(message)
    return resp.json()


def _market(args) -> MarketIn:
    return MarketIn(spot=args.spot, rate=args.r, sigma=args.sigma)


def _option(args) -> OptionIn:
    return OptionIn(strike=args.K, moneyness=args.moneyness, maturity=args.T,
                    kind=args.kind)


def _add_market_option_flags(p):
    p.add_argument("--spot", type=float, default=1.0, help="spot price (default 1)")
    p.add_argument("--r", type=float, default=0.05, help="interest rate per year")
    p.add_argument("--sigma", type=float, default=0.3, help="volatility per sqrt(year)")
    p.add_argument("--T", type=float, default=0.1, help="option maturity in years")
    p.add_argument("--K", type=float, default=None, help="strike in currency")
    p.add_argument("--moneyness", type=float, default=None, help="strike / spot")
    p.add_argument("--kind", choices=["call", "put"], default="call")


def _add_common_flags(p):
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--server", default=None,
                   help="base URL of a running service; default runs in-process")
    p.add_argument("--config", default=None,
                   help="JSON file holding the full request; other flags are ignored")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liqcost",
        description="Expected liquidity cost of delta hedging against a supply curve",
        epilog="Times are in years: day = 1/252, hour = 1/(252*6.5).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unitcost", help="unit cost I by quadrature, or a sweep")
    _add_market_option_flags(p)
    p.add_argument("--alpha", type=float, default=1.0, help="supply-curve slope")
    p.add_argument("--n-options", type=float, default=1.0)
    p.add_argument("--t-step", type=float, default=1e-4)
    p.add_argument("--k-step", type=float, default=1e-3)
    p.add_argument("--k-min", type=float, default=None)
    p.add_argument("--k-max", type=float, default=None)
    p.add_argument("--truncation", type=float, default=0.004,
                   help="stop hedging this long before expiry")
    p.add_argument("--sweep-T", type=_floats, default=None,
                   help="comma list of maturities (enables sweep mode)")
    p.add_argument("--sweep-K", type=_floats, default=None,
                   help="comma list of moneyness values for the sweep")
    _add_common_flags(p)

    p = sub.add_parser("simulate", help="Monte Carlo hedging cost")
    _add_market_option_flags(p)
    p.add_argument("--policy", choices=["hourly", "interval", "threshold"],
                   default="hourly")
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n-options", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=None, help="interval policy step")
    p.add_argument("--delta-threshold", type=float, default=0.05)
    p.add_argument("--monitor-dt", type=float, default=None)
    p.add_argument("--trade-mode", choices=["rebalance", "fixed_chunk"],
                   default="rebalance")
    p.add_argument("--gamma-costs", action="store_true",
                   help="charge gamma^2 step costs instead of exact delta changes")
    p.add_argument("--stop-time", type=float, default=None)
    p.add_argument("--drift", type=float, default=None,
                   help="physical drift; default hedges under the pricing measure")
    p.add_argument("--threads", type=int, default=1)
    _add_common_flags(p)

    p = sub.add_parser("distribution", help="full distribution of the hedging cost")
    _add_market_option_flags(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=50, help="rebalance count N")
    p.add_argument("--n-moneyness", type=int, default=161)
    p.add_argument("--n-xi", type=int, default=240)
    p.add_argument("--xi-max", type=float, default=None)
    p.add_argument("--measure", choices=["risk_neutral", "physical"],
                   default="risk_neutral")
    p.add_argument("--drift", type=float, default=None)
    p.add_argument("--mc-overlay", action="store_true",
                   help="append Monte Carlo CDF/histogram columns")
    p.add_argument("--mc-paths", type=int, default=100_000)
    p.add_argument("--mc-seed", type=int, default=0)
    _add_common_flags(p)

    p = sub.add_parser("supplycurve", help="book slopes and order-flow depths")
    sc = p.add_subparsers(dest="subcommand", required=True)

    f = sc.add_parser("fit", help="fit the supply-curve slope from a book CSV")
    f.add_argument("--book", required=True, help="CSV with columns side,price,size")
    f.add_argument("--tick", type=float, default=None)
    f.add_argument("--regime", choices=["continuous", "discrete"], default="continuous")
    f.add_argument("--Q", type=float, default=None, help="trade size for the discrete regime")
    f.add_argument("--window-fraction", type=float, default=0.1)
    f.add_argument("--samples-per-side", type=int, default=25)
    _add_common_flags(f)

    e = sc.add_parser("eval", help="execution price of a market order")
    e.add_argument("--book", required=True)
    e.add_argument("--tick", type=float, default=None)
    e.add_argument("--z", type=float, required=True, help="signed order size")
    _add_common_flags(e)

    s = sc.add_parser("stationary", help="expected depths of the order-flow model")
    s.add_argument("--depth", type=int, default=1)
    s.add_argument("--mu", type=float, default=0.0)
    s.add_argument("--lambda1", type=float, default=None)
    s.add_argument("--lambdas", type=_floats, default=None)
    s.add_argument("--power-k", type=float, default=None)
    s.add_argument("--power-a", type=float, default=None)
    s.add_argument("--theta1", type=float, default=None)
    s.add_argument("--thetas", type=_floats, default=None)
    s.add_argument("--tick", type=float, default=0.01)
    s.add_argument("--mid", type=float, default=30.0)
    s.add_argument("--no-fit", action="store_true",
                   help="skip fitting the synthetic book")
    _add_common_flags(s)
    return parser


def _book_payload(args) -> BookIn:
    book = load_book_csv(args.book, tick=args.tick)
    return BookIn(asks=list(book.asks), bids=list(book.bids), tick=book.tick)


def build_request(args):
    if args.config is not None:
        model = {
            ("unitcost", None): UnitCostRequest,
            ("simulate", None): SimulateRequest,
            ("distribution", None): DistributionRequest,
            ("supplycurve", "fit"): FitRequest,
            ("supplycurve", "eval"): EvalRequest,
            ("supplycurve", "stationary"): StationaryRequest,
        }[(args.command, getattr(args, "subcommand", None))]
        with open(args.config) as fh:
            payload = json.load(fh)
        if args.command == "unitcost" and "maturities" in payload:
            model = SweepRequest
        return model.model_validate(payload)

    if args.command == "unitcost":
        grid = GridIn(t_step=args.t_step, k_step=args.k_step, k_min=args.k_min,
                      k_max=args.k_max, truncation=args.truncation)
        if args.sweep_T is not None or args.sweep_K is not None:
            if not (args.sweep_T and args.sweep_K):
                raise ConfigError("sweep mode needs both --sweep-T and --sweep-K")
            return SweepRequest(market=_market(args), maturities=args.sweep_T,
                                moneyness=args.sweep_K, kind=args.kind, grid=grid,
                                alpha=args.alpha, n_options=args.n_options)
        return UnitCostRequest(market=_market(args), option=_option(args), grid=grid,
                               alpha=args.alpha, n_options=args.n_options)
    if args.command == "simulate":
        policy = PolicyIn(
            variant=args.policy, dt=args.dt, gamma_costs=args.gamma_costs,
            delta_threshold=args.delta_threshold, monitor_dt=args.monitor_dt,
            trade_mode=args.trade_mode,
        )
        return SimulateRequest(
            market=_market(args), option=_option(args), policy=policy,
            n_paths=args.paths, seed=args.seed, alpha=args.alpha,
            n_options=args.n_options, stop_time=args.stop_time, drift=args.drift,
            threads=args.threads,
        )
    if args.command == "distribution":
        return DistributionRequest(
            market=_market(args), option=_option(args), alpha=args.alpha,
            n_steps=args.steps, n_moneyness=args.n_moneyness, n_xi=args.n_xi,
            xi_max=args.xi_max, measure=args.measure, drift=args.drift,
            mc_overlay=args.mc_overlay, mc_paths=args.mc_paths, mc_seed=args.mc_seed,
        )
    if args.subcommand == "fit":
        return FitRequest(book=_book_payload(args), regime=args.regime,
                          trade_size=args.Q, window_fraction=args.window_fraction,
                          samples_per_side=args.samples_per_side)
    if args.subcommand == "eval":
        return EvalRequest(book=_book_payload(args), z=args.z)
    lambdas = args.lambdas
    return StationaryRequest(
        depth=args.depth if lambdas is None else len(lambdas),
        mu=args.mu, lambdas=lambdas, lambda1=args.lambda1,
        power_k=args.power_k, power_a=args.power_a,
        theta1=args.theta1, thetas=args.thetas,
        tick=args.tick, mid=args.mid, fit_synthetic=not args.no_fit,
    )


def _csv_rows(req, report):
    if isinstance(req, SweepRequest):
        cols = ["maturity", "moneyness", "I", "interior_term", "boundary_term",
                "expected_cost"]
        return cols, [[row[c] for c in cols] for row in report["rows"]]
    if isinstance(req, DistributionRequest):
        cols = ["xi", "cdf", "density"]
        series = [report["xi"], report["cdf"], report["density"]]
        if report.get("mc_cdf") is not None:
            cols += ["mc_cdf", "mc_density"]
            series += [report["mc_cdf"], report["mc_density"]]
        return cols, list(map(list, zip(*series)))
    if isinstance(req, StationaryRequest):
        return ["tick", "depth"], [[row["tick"], row["depth"]]
                                   for row in report["depths"]]
    raise ConfigError(f"csv output is not defined for the {type(req).__name__} report")


def render(req, report, fmt) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2)
    cols, rows = _csv_rows(req, report)
    lines = [",".join(cols)]
    lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row)
              for row in rows]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        req = build_request(args)
        report = _dispatch(req, args.server)
        text = render(req, report, args.format)
    except (ConfigError, DomainError, ValidationError, OSError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
