"""HTTP surface tests: every endpoint, validation failures, and the error
mapping for numerical problems."""
import pytest
from fastapi.testclient import TestClient

from liqcost.service import app

client = TestClient(app)

MSFT_ASKS = [[30.14, 28632], [30.15, 83663], [30.16, 37705]]
MSFT_BIDS = [[30.13, 51326], [30.12, 84106]]


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_unitcost_default_matches_reference_value():
    resp = client.post("/unitcost", json={})
    assert resp.status_code == 200
    body = resp.json()
    assert body["I"] == pytest.approx(0.2040, abs=2e-3)
    assert body["I"] == pytest.approx(body["interior_term"] + body["boundary_term"])
    assert body["expected_cost"] == pytest.approx(body["I"])
    # provenance echo
    assert body["config"]["market"]["sigma"] == 0.3
    assert set(body["grid"]) == {"t_step", "k_min", "k_max", "k_step", "t_max"}


def test_unitcost_scales_expected_cost():
    req = {"alpha": 2.0, "n_options": 3.0, "market": {"spot": 10.0}}
    body = client.post("/unitcost", json=req).json()
    assert body["expected_cost"] == pytest.approx(2.0 * 9.0 * 10.0 * body["I"])


def test_unitcost_rejects_conflicting_strike_conventions():
    resp = client.post("/unitcost", json={
        "option": {"strike": 1.0, "moneyness": 1.0}})
    assert resp.status_code == 422  # pydantic validation


def test_unitcost_rejects_impossible_truncation():
    resp = client.post("/unitcost", json={
        "option": {"maturity": 0.003}, "grid": {"truncation": 0.004}})
    assert resp.status_code == 400
    assert "truncation" in resp.json()["detail"]["message"]


def test_sweep_rows():
    resp = client.post("/unitcost/sweep", json={
        "maturities": [0.1], "moneyness": [0.9, 1.0],
        "grid": {"t_step": 2e-4, "k_step": 2e-3}})
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert len(rows) == 2
    atm = next(r for r in rows if r["moneyness"] == 1.0)
    assert atm["I"] == pytest.approx(0.2040, abs=3e-3)


def test_simulate_is_deterministic_over_the_wire():
    req = {"n_paths": 300, "seed": 11, "option": {"maturity": 0.1}}
    a = client.post("/simulate", json=req).json()
    b = client.post("/simulate", json=req).json()
    assert a == b
    assert a["mean"] > 0
    assert a["policy"]["variant"] == "fixed_interval"


def test_simulate_threshold_policy_roundtrip():
    req = {"n_paths": 200, "seed": 1, "policy": {"variant": "threshold",
                                                 "delta_threshold": 0.1}}
    body = client.post("/simulate", json=req).json()
    assert body["policy"]["delta_threshold"] == 0.1
    assert body["ci99"] == pytest.approx(2.576 * body["sd"] / 200**0.5)


def test_distribution_endpoint_and_zero_slope_degenerate():
    body = client.post("/distribution", json={
        "option": {"maturity": 0.1}, "market": {"sigma": 0.8},
        "n_steps": 10, "n_moneyness": 81, "n_xi": 120}).json()
    assert 0.99 < body["mass"] < 1.01
    assert len(body["xi"]) == len(body["cdf"]) == len(body["density"])
    assert body["mean"] > 0

    degenerate = client.post("/distribution", json={"alpha": 0.0}).json()
    assert degenerate["mean"] == 0.0
    assert degenerate["cdf"][0] == 1.0


def test_distribution_scales_with_spot_and_alpha():
    base = client.post("/distribution", json={
        "option": {"maturity": 0.1}, "market": {"sigma": 0.8},
        "n_steps": 5, "n_moneyness": 61, "n_xi": 100}).json()
    scaled = client.post("/distribution", json={
        "option": {"maturity": 0.1}, "market": {"sigma": 0.8, "spot": 2.0},
        "alpha": 3.0, "n_steps": 5, "n_moneyness": 61, "n_xi": 100}).json()
    assert scaled["mean"] == pytest.approx(6.0 * base["mean"], rel=1e-9)
    assert scaled["xi"][5] == pytest.approx(6.0 * base["xi"][5], rel=1e-9)


def test_eval_endpoint_prices_the_fixture_book():
    resp = client.post("/supplycurve/eval", json={
        "book": {"asks": MSFT_ASKS, "bids": MSFT_BIDS}, "z": 150000})
    assert resp.status_code == 200
    assert resp.json()["price"] == pytest.approx(30.150604866666667)


def test_eval_insufficient_depth_is_structured_422():
    resp = client.post("/supplycurve/eval", json={
        "book": {"asks": MSFT_ASKS, "bids": MSFT_BIDS}, "z": 10_000_000})
    assert resp.status_code == 422
    detail = resp.json()["detail"]
    assert detail["type"] == "InsufficientDepthError"
    assert detail["max_fillable"] == pytest.approx(28632 + 83663 + 37705)


def test_fit_endpoint_discrete_requires_trade_size():
    resp = client.post("/supplycurve/fit", json={
        "book": {"asks": MSFT_ASKS, "bids": MSFT_BIDS}, "regime": "discrete"})
    assert resp.status_code == 400
    ok = client.post("/supplycurve/fit", json={
        "book": {"asks": MSFT_ASKS, "bids": MSFT_BIDS}, "regime": "discrete",
        "trade_size": 150000})
    assert ok.status_code == 200
    assert ok.json()["alpha"] == pytest.approx(3.4522131887985547e-09, rel=1e-9)
    assert ok.json()["Q"] == 150000


def test_stationary_endpoint_depths_and_synthetic_fit():
    resp = client.post("/supplycurve/stationary", json={
        "lambda1": 10.0, "mu": 4.0, "theta1": 2.0, "depth": 1})
    assert resp.status_code == 200
    body = resp.json()
    assert body["depths"] == [{"tick": 1, "depth": 3.0}]
    assert body["fit"]["alpha"] > 0

    multi = client.post("/supplycurve/stationary", json={
        "power_k": 10.0, "power_a": 0.6, "mu": 4.0, "theta1": 1.0,
        "depth": 5}).json()
    assert len(multi["depths"]) == 5
    assert multi["depths"][0]["depth"] == pytest.approx(6.0)


def test_stationary_endpoint_rejects_invalid_rates():
    resp = client.post("/supplycurve/stationary", json={
        "lambda1": 3.0, "mu": 4.0, "theta1": 2.0, "depth": 1})
    assert resp.status_code == 400
    assert "lambda(1) > mu" in resp.json()["detail"]["message"]
