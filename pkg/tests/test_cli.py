import math

import pytest

from accelode import cli, continuous, traces
from accelode.config import ExperimentConfig, resolve_damping, resolve_step
from accelode.errors import ConfigError


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_defaults_round_trip(capsys):
    assert run_cli("defaults") == 0
    text = capsys.readouterr().out
    assert "[problem]" in text and "[scheme]" in text
    assert ExperimentConfig.from_ini(text) == ExperimentConfig()


def test_config_round_trip_with_changes():
    cfg = ExperimentConfig()
    for key, value in [("problem.kind", "ridge_l1"), ("problem.alpha", "0.3"), ("run.seeds", "3,1,2"),
                       ("scheme.variants", "nesterov,acd"), ("run.certify", "off"), ("scheme.step", "0.05")]:
        cfg.set(key, value)
    again = ExperimentConfig.from_ini(cfg.to_ini())
    assert again == cfg
    assert again.run.seeds == (3, 1, 2)
    with pytest.raises(ConfigError):
        cfg.set("problem.nope", "1")
    with pytest.raises(ConfigError):
        cfg.set("run.iterations", "many")


def test_auto_resolution():
    assert resolve_step("auto", 100.0) == 0.1
    assert resolve_damping("auto", 4.0) == 4.0
    assert resolve_step("0.2", 100.0) == 0.2


def test_run_one_iteration_scalar(tmp_path):
    out = tmp_path / "o"
    code = run_cli("run", "--iters", 1, "--out", out, "--set", "problem.dimension=1",
                   "--set", "problem.centered=on", "--set", "problem.lipschitz=1")
    assert code == 0
    rows = traces.read_csv(out / "trace.csv")
    assert len(rows) == 1
    assert list(rows[0]) == list(traces.TRACE_COLUMNS)


def test_run_kappa100_certified(tmp_path):
    out = tmp_path / "o"
    assert run_cli("run", "--iters", 500, "--certify", "on", "--step", "auto", "--out", out) == 0
    rows = traces.read_csv(out / "trace.csv")
    assert len(rows) == 500 and all(r["cert_pass"] == "1" for r in rows)
    certs = traces.read_csv(out / "certificates.csv")
    assert list(certs[0]) == list(traces.CERTIFICATE_COLUMNS)
    assert {c["verdict"] for c in certs} == {"pass"}


def test_run_large_step_exit_codes(tmp_path, capsys):
    out = tmp_path / "o"
    assert run_cli("run", "--iters", 200, "--step", 0.3, "--out", out) == cli.EXIT_USAGE
    capsys.readouterr()
    code = run_cli("run", "--iters", 200, "--step", 0.3, "--out", out, "--set", "scheme.strict=off")
    assert code == cli.EXIT_CERTIFICATE
    assert "certificate contraction failed" in capsys.readouterr().err


def test_run_divergence_exit_code(tmp_path):
    code = run_cli("run", "--variant", "flow", "--step", 0.5, "--iters", 2000, "--out", tmp_path)
    assert code == cli.EXIT_DIVERGED


def test_config_errors_exit_usage(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[problem\nkind = quadratic\n")
    assert run_cli("run", "--config", bad, "--out", tmp_path) == cli.EXIT_USAGE
    assert run_cli("run", "--set", "problem.kind=cubic", "--out", tmp_path) == cli.EXIT_USAGE
    assert run_cli("run", "--config", tmp_path / "missing.ini") == cli.EXIT_USAGE
    assert run_cli("bogus") == cli.EXIT_USAGE


def test_config_file_is_read(tmp_path):
    cfg = ExperimentConfig()
    cfg.set("problem.dimension", "8")
    cfg.set("run.iterations", "7")
    cfg.set("run.out", str(tmp_path / "o"))
    path = tmp_path / "exp.ini"
    path.write_text(cfg.to_ini())
    assert run_cli("run", "--config", path) == 0
    assert len(traces.read_csv(tmp_path / "o" / "trace.csv")) == 7


@pytest.mark.parametrize("variant", ["paper_composite", "acd", "acd_semi_greedy"])
def test_run_other_variants(tmp_path, variant):
    kind = "ridge_l1" if variant == "paper_composite" else "quadratic"
    code = run_cli("run", "--variant", variant, "--iters", 60, "--out", tmp_path, "--seeds", "0,1",
                   "--set", f"problem.kind={kind}", "--set", "problem.dimension=6")
    assert code == 0
    if variant.startswith("acd"):
        merged = traces.read_csv(tmp_path / "trace_merged.csv")
        assert len(merged) == 120 and merged[0]["seed"] == "0" and merged[-1]["seed"] == "1"
        assert list(traces.read_csv(tmp_path / "trace_seed1.csv")[0]) == list(traces.COORDINATE_COLUMNS)


def test_run_is_byte_deterministic(tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_cli("run", "--variant", "acd", "--iters", 80, "--seeds", "4,2", "--out", out,
                       "--set", "problem.dimension=5") == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]
    assert len(outputs[0]) == 5


def test_compare_unit_condition_nesterov_one_step(tmp_path):
    code = run_cli("compare", "--variants", "nesterov", "--tol", 1e-12, "--out", tmp_path,
                   "--set", "problem.lipschitz=1", "--set", "problem.dimension=10")
    assert code == 0
    assert traces.read_csv(tmp_path / "compare.csv") == [{"variant": "nesterov", "iterations": "1"}]


def test_compare_kappa_1e4(tmp_path):
    code = run_cli("compare", "--variants", "paper_smooth,gradient_descent", "--tol", 1e-6,
                   "--out", tmp_path, "--set", "problem.lipschitz=1e4")
    assert code == 0
    rows = {r["variant"]: r["iterations"] for r in traces.read_csv(tmp_path / "compare.csv")}
    assert int(rows["gradient_descent"]) / int(rows["paper_smooth"]) >= 10


def test_compare_budget_sentinel(tmp_path):
    code = run_cli("compare", "--variants", "gradient_descent", "--tol", 1e-12, "--out", tmp_path,
                   "--set", "run.budget=5")
    assert code == 0
    assert traces.read_csv(tmp_path / "compare.csv")[0]["iterations"] == "inf"


def test_compare_empty_variants(tmp_path):
    assert run_cli("compare", "--variants", "", "--out", tmp_path) == cli.EXIT_USAGE


def test_sweep_damping(tmp_path):
    code = run_cli("sweep-damping", "--out", tmp_path, "--set", "sweep.lambda_max=1")
    assert code == 0
    rows = traces.read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 200
    gammas = [float(r["gamma"]) for r in rows]
    best = min(range(200), key=lambda k: float(rows[k]["decay_rate"]))
    assert best == min(range(200), key=lambda k: abs(gammas[k] - 2.0))
    at_two = rows[best]
    assert at_two["regime"] == "critical"
    assert abs(float(at_two["empirical_rate"]) + 1) <= 0.05


def test_sweep_flags_divergence_without_failing(tmp_path):
    code = run_cli("sweep-damping", "--out", tmp_path, "--set", "sweep.dt=0.5", "--set", "sweep.grid=5",
                   "--set", "sweep.horizon=100")
    assert code == 0
    rows = traces.read_csv(tmp_path / "sweep.csv")
    assert any(r["diverged"] == "1" for r in rows)


def test_overdamped_grid():
    for gamma in [2.5, 3.0, 3.5, 4.0]:
        assert continuous.classify_damping(1.0, gamma).regime == "overdamped"


def test_plot_data(tmp_path):
    trace = tmp_path / "t.csv"
    traces.write_csv(trace, traces.TRACE_COLUMNS, [(0, 1.0, 2.0, 0.5, True), (1, 0.1, 1.0, 0.5, True),
                                                   (2, 0.0, 0.0, 0.0, True)])
    assert run_cli("plot-data", trace) == 0
    lines = trace.with_suffix(".dat").read_text().splitlines()
    assert lines == ["0 0.0", "1 -1.0", "2 -16.0"]


def test_plot_data_row_count(tmp_path):
    out = tmp_path / "o"
    assert run_cli("run", "--iters", 500, "--certify", "off", "--out", out) == 0
    assert run_cli("plot-data", out / "trace.csv") == 0
    assert len((out / "trace.dat").read_text().splitlines()) == 500


def test_plot_data_missing_file(tmp_path):
    assert run_cli("plot-data", tmp_path / "nope.csv") == cli.EXIT_FILE


def test_flow_trajectory_export(tmp_path):
    code = run_cli("run", "--variant", "flow", "--step", 0.01, "--iters", 300, "--out", tmp_path,
                   "--set", "problem.dimension=5")
    assert code == 0
    rows = traces.read_csv(tmp_path / "trajectory.csv")
    assert list(rows[0]) == list(traces.TRAJECTORY_COLUMNS)
    assert len(rows) == 301
    assert math.isclose(float(rows[-1]["t"]), 3.0)
