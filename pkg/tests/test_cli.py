import json

import numpy as np
import pytest

from ocpstab.cli import linear_config, main, pendulum_config

LINEAR = {"m": 1, "b": 1, "a": 1, "v0": 0, "vt": 20, "T": 10, "alpha": 0.1, "N": 100}
PENDULUM = {"m1": 1, "m2": 1, "k": 1, "a": 1, "x_target": 2, "T": 4, "alpha": 1e-2, "dt": 0.2}


def _cfg(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def _stderr_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def _solve_linear(tmp_path, cfg, scheme="mp", tag="a"):
    out, summ = tmp_path / f"{tag}.csv", tmp_path / f"{tag}.json"
    code = main(["solve-linear", "--config", _cfg(tmp_path, cfg, f"{tag}_cfg.json"), "--scheme", scheme,
                 "--out", str(out), "--summary", str(summ)])
    return code, out, summ


def test_solve_linear_outputs(tmp_path):
    code, out, summ = _solve_linear(tmp_path, LINEAR)
    assert code == 0
    lines = out.read_bytes().split(b"\n")
    assert lines[0] == b"t,v,lambda,u,v_exact,lambda_exact,u_exact,abs_err_v"
    assert b"\r" not in out.read_bytes()
    assert len([l for l in lines if l]) == 102
    s = json.loads(summ.read_text())
    assert s["stability"]["classification"] == "Smooth"
    assert s["max_abs_err"]["v"] < 0.1


def test_solve_linear_small_alpha_is_oscillatory(tmp_path):
    code, _, summ = _solve_linear(tmp_path, {**LINEAR, "alpha": 1e-3})
    assert code == 0
    assert json.loads(summ.read_text())["stability"]["classification"] == "Oscillatory"


def test_solve_linear_is_deterministic(tmp_path):
    _, a, sa = _solve_linear(tmp_path, LINEAR, tag="a")
    _, b, sb = _solve_linear(tmp_path, LINEAR, tag="b")
    assert a.read_bytes() == b.read_bytes()
    assert sa.read_bytes() == sb.read_bytes()


def test_summary_round_trips_into_config(tmp_path):
    _, out, summ = _solve_linear(tmp_path, LINEAR)
    block = json.loads(summ.read_text())["config"]
    params, grid = linear_config(block)
    ref_params, ref_grid = linear_config(LINEAR)
    assert params == ref_params and grid == ref_grid
    _, out2, _ = _solve_linear(tmp_path, block, tag="c")
    assert out.read_bytes() == out2.read_bytes()


def test_dt_and_N_configs_agree(tmp_path):
    cfg = dict(LINEAR)
    del cfg["N"]
    cfg["dt"] = 0.1
    assert linear_config(cfg)[1] == linear_config(LINEAR)[1]


@pytest.mark.parametrize("bad", ["{not json", json.dumps({**LINEAR, "dt": 0.1}), json.dumps({**LINEAR, "m": -1}),
                                 json.dumps({**LINEAR, "zeta": 1}), json.dumps([1, 2]),
                                 json.dumps({**LINEAR, "N": 2.5})])
def test_solve_linear_config_errors_exit_2(tmp_path, capsys, bad):
    code, _, _ = _solve_linear(tmp_path, bad)
    assert code == 2
    assert _stderr_json(capsys)["error"] in ("ConfigurationError", "ContractViolation")


def test_missing_config_file_exits_2(tmp_path, capsys):
    code = main(["solve-linear", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.csv"),
                 "--summary", str(tmp_path / "s.json")])
    assert code == 2
    assert "error" in _stderr_json(capsys)


def test_unwritable_output_exits_2(tmp_path, capsys):
    code = main(["solve-linear", "--config", _cfg(tmp_path, LINEAR), "--out", str(tmp_path / "no" / "o.csv"),
                 "--summary", str(tmp_path / "s.json")])
    assert code == 2


def test_bad_arguments_exit_2(capsys):
    assert main(["stability", "--alpha", "x", "--dt", "0.1"]) == 2
    assert _stderr_json(capsys)["error"] == "ConfigurationError"
    assert main(["bogus"]) == 2


@pytest.mark.parametrize("scheme,alpha", [("mp", "2.5063e-3"), ("ie", "1.0101e-2")])
def test_stability_boundary(capsys, scheme, alpha):
    assert main(["stability", "--m", "1", "--b", "1", "--alpha", alpha, "--dt", "0.1", "--scheme", scheme]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["classification"] == "Boundary"
    assert set(rep) >= {"gamma", "gamma_dt", "e1", "e2", "spectral_radius", "alpha_th", "log_distance"}


def test_stability_blowup_exits_zero(capsys):
    # gamma * dt = 2 exactly: gamma^2 = 1 + 1/alpha = 400
    assert main(["stability", "--alpha", repr(1 / 399), "--dt", "0.1", "--scheme", "mp"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["classification"] == "BlowUp"
    assert rep["spectral_radius"] is None


def test_sweep_writes_dt_major_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--scheme", "mp", "--n", "5", "--jobs", "1", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "alpha,dt,class_numeric,class_analytic,osc_index,alpha_th"
    body = [r.split(",") for r in rows[1:]]
    assert len(body) == 25
    dts = [float(r[1]) for r in body]
    assert dts == sorted(dts)
    assert [float(r[0]) for r in body[:5]] == sorted(float(r[0]) for r in body[:5])


def test_sweep_output_independent_of_jobs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--scheme", "ie", "--n", "6"]
    assert main(args + ["--jobs", "1", "--out", str(a)]) == 0
    assert main(args + ["--jobs", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_above_thresholds_is_smooth(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--scheme", "both", "--alpha-min", "0.1", "--alpha-max", "1", "--dt-min", "0.01",
                 "--dt-max", "0.1", "--n", "4", "--jobs", "1", "--out", str(out)]) == 0
    for s in ("mp", "ie"):
        body = (tmp_path / f"s_{s}.csv").read_text().splitlines()[1:]
        assert {tuple(r.split(",")[2:4]) for r in body} == {("Smooth", "Smooth")}


def test_sweep_rejects_bad_range(tmp_path, capsys):
    assert main(["sweep", "--alpha-min", "1", "--alpha-max", "0.1", "--out", str(tmp_path / "x.csv")]) == 2


def test_pendulum_without_continuation_reports_history(tmp_path, capsys):
    code = main(["pendulum", "--config", _cfg(tmp_path, PENDULUM), "--out", str(tmp_path / "p.csv"),
                 "--summary", str(tmp_path / "p.json"), "--max-iter", "3"])
    assert code == 3
    err = _stderr_json(capsys)
    assert err["error"] == "ConvergenceError" and len(err["residual_history"]) == 4


def test_pendulum_with_continuation(tmp_path):
    out, summ = tmp_path / "p.csv", tmp_path / "p.json"
    code = main(["pendulum", "--config", _cfg(tmp_path, PENDULUM), "--continuation", "--out", str(out),
                 "--summary", str(summ)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "t,x1,x2x,x2y,v2x,v2y,u,lambda_norm"
    assert len(rows) == 22
    s = json.loads(summ.read_text())
    assert s["residual"] <= 1e-10 and s["iterations"] <= 50
    params, grid = pendulum_config(s["config"])
    assert grid.N == 20 and params.alpha == 1e-2
    first = np.array(rows[1].split(","), float)
    np.testing.assert_array_equal(first[:6], [0, 0, 0.3, 1, 0, 0])


def test_pendulum_alpha_override(tmp_path):
    summ = tmp_path / "p.json"
    assert main(["pendulum", "--config", _cfg(tmp_path, PENDULUM), "--alpha", "0.1", "--continuation",
                 "--out", str(tmp_path / "p.csv"), "--summary", str(summ)]) == 0
    assert json.loads(summ.read_text())["config"]["alpha"] == 0.1
