"""CLI contract tests: flags, output formats, exit codes, determinism, and
the remote-server dispatch path."""
import json
from pathlib import Path

import pytest

from liqcost.cli import main

DATA = Path(__file__).parent / "data"
MSFT = str(DATA / "msft_book.csv")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_unitcost_default_report(capsys):
    code, out, _ = run_cli(capsys, "unitcost")
    assert code == 0
    body = json.loads(out)
    assert body["I"] == pytest.approx(0.2040, abs=2e-3)
    assert body["config"]["option"]["maturity"] == 0.1


def test_unitcost_zero_slope_flag(capsys):
    code, out, _ = run_cli(capsys, "unitcost", "--alpha", "0",
                           "--t-step", "2e-4", "--k-step", "2e-3")
    assert code == 0
    assert json.loads(out)["expected_cost"] == 0.0


def test_sweep_csv_output(capsys, tmp_path):
    out_file = tmp_path / "sweep.csv"
    code, _, _ = run_cli(capsys, "unitcost", "--sweep-T", "0.1", "--sweep-K",
                         "0.9,1.0", "--t-step", "2e-4", "--k-step", "2e-3",
                         "--format", "csv", "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "maturity,moneyness,I,interior_term,boundary_term,expected_cost"
    assert len(lines) == 3


def test_sweep_requires_both_axes(capsys):
    code, _, err = run_cli(capsys, "unitcost", "--sweep-T", "0.1")
    assert code == 2
    assert "sweep" in err


def test_simulate_deterministic_given_seed(capsys):
    args = ("simulate", "--paths", "200", "--seed", "9", "--T", "0.1")
    code_a, out_a, _ = run_cli(capsys, *args)
    code_b, out_b, _ = run_cli(capsys, *args)
    assert code_a == code_b == 0
    assert out_a == out_b
    assert json.loads(out_a)["mean"] > 0


def test_simulate_single_path(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--paths", "1", "--seed", "3")
    assert code == 0
    assert json.loads(out)["mean"] >= 0.0


def test_simulate_csv_is_a_config_error(capsys):
    code, _, err = run_cli(capsys, "simulate", "--paths", "10", "--format", "csv")
    assert code == 2
    assert "csv" in err


def test_distribution_csv_columns(capsys):
    code, out, _ = run_cli(capsys, "distribution", "--sigma", "0.8", "--T", "0.1",
                           "--steps", "8", "--n-moneyness", "61", "--n-xi", "100",
                           "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "xi,cdf,density"
    assert len(lines) == 101
    # density column integrates to ~1 on the xi grid
    import numpy as np
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    trapezoid = getattr(np, 'trapezoid', None) or np.trapz
    mass = trapezoid(rows[:, 2], rows[:, 0])
    assert 0.99 < mass < 1.01


def test_distribution_zero_slope_degenerates(capsys):
    code, out, _ = run_cli(capsys, "distribution", "--alpha", "0")
    assert code == 0
    body = json.loads(out)
    assert body["mean"] == 0.0 and body["cdf"][0] == 1.0


def test_supplycurve_eval_fixture(capsys):
    code, out, _ = run_cli(capsys, "supplycurve", "eval", "--book", MSFT,
                           "--z", "150000")
    assert code == 0
    assert json.loads(out)["price"] == pytest.approx(30.150604866666667)


def test_supplycurve_eval_exceeding_depth_is_numerical_error(capsys):
    code, _, err = run_cli(capsys, "supplycurve", "eval", "--book", MSFT,
                           "--z", "99999999")
    assert code == 3
    assert "depth" in err


def test_supplycurve_eval_missing_book_is_config_error(capsys):
    code, _, _ = run_cli(capsys, "supplycurve", "eval", "--book", "no_such.csv",
                         "--z", "1")
    assert code == 2


def test_supplycurve_fit_continuous_and_discrete(capsys):
    code, out, _ = run_cli(capsys, "supplycurve", "fit", "--book", MSFT)
    assert code == 0
    assert json.loads(out)["alpha"] > 0
    code, out, _ = run_cli(capsys, "supplycurve", "fit", "--book", MSFT,
                           "--regime", "discrete", "--Q", "150000")
    assert code == 0
    assert json.loads(out)["alpha"] == pytest.approx(3.4522131887985547e-09, rel=1e-9)


def test_supplycurve_stationary_csv(capsys):
    code, out, _ = run_cli(capsys, "supplycurve", "stationary", "--lambda1", "10",
                           "--mu", "4", "--theta1", "2", "--depth", "1",
                           "--format", "csv")
    assert code == 0
    assert out.strip().splitlines() == ["tick,depth", "1,3.0"]


def test_supplycurve_stationary_rejects_drained_book(capsys):
    code, _, err = run_cli(capsys, "supplycurve", "stationary", "--lambda1", "2",
                           "--mu", "4", "--theta1", "2")
    assert code == 2
    assert "lambda(1) > mu" in err


def test_config_file_replaces_flags(capsys, tmp_path):
    cfg = tmp_path / "eval.json"
    book = {"asks": [[30.14, 28632], [30.15, 83663], [30.16, 37705]],
            "bids": [[30.13, 51326], [30.12, 84106]]}
    cfg.write_text(json.dumps({"book": book, "z": 150000}))
    code, out, _ = run_cli(capsys, "supplycurve", "eval", "--book", MSFT,
                           "--z", "1", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["price"] == pytest.approx(30.150604866666667)


def test_server_mode_posts_to_the_service(capsys, monkeypatch):
    import httpx
    from fastapi.testclient import TestClient

    from liqcost.service import app

    test_client = TestClient(app)

    def fake_post(url, json=None, timeout=None):
        assert url.startswith("http://fake:1234/")
        return test_client.post(url.replace("http://fake:1234", ""), json=json)

    monkeypatch.setattr(httpx, "post", fake_post)
    code, out, _ = run_cli(capsys, "supplycurve", "eval", "--book", MSFT,
                           "--z", "150000", "--server", "http://fake:1234")
    assert code == 0
    assert json.loads(out)["price"] == pytest.approx(30.150604866666667)
    # numerical errors surface as exit code 3 through HTTP too
    code, _, err = run_cli(capsys, "supplycurve", "eval", "--book", MSFT,
                           "--z", "99999999", "--server", "http://fake:1234")
    assert code == 3
    assert "depth" in err
