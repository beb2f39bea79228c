import pytest
from click.testing import CliRunner

from dkr.cli import main
from dkr.regression import TrainedModel
from dkr.synthetic import SyntheticSpec, generate, write_csv


def run(*args):
    result = CliRunner().invoke(main, list(args), catch_exceptions=False)
    return result


def test_fit_synthetic_and_save(tmp_path):
    model_path = tmp_path / "m.json"
    res = run("fit", "--N", "120", "--kernel", "gaussian", "--method", "bckrr", "--save", str(model_path))
    assert res.exit_code == 0
    assert "lambda=" in res.output and "training_mse=" in res.output
    model = TrainedModel.from_json(model_path.read_text())
    assert model.coeffs.size == 120 and model.variant.value == "bckrr"


def test_fit_from_csv_distributed(tmp_path):
    path = tmp_path / "d.csv"
    write_csv(generate(SyntheticSpec(), 80, 1), path)
    res = run("fit", "--data", str(path), "--partitions", "4", "--lambda", "0.01")
    assert res.exit_code == 0
    assert "N=80 m=4" in res.output and "lambda=0.01" in res.output


def test_experiment_writes_csv_and_plot(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("N = 64\nm_grid = 1, 4\nrepetitions = 2\nkernels = sobolev\n")
    out, plot = tmp_path / "r.csv", tmp_path / "p.gp"
    res = run("experiment", "--config", str(cfg), "--out", str(out), "--plot", str(plot), "--method", "krr")
    assert res.exit_code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "kernel,method,N,m,lambda,repetition,mse,wall_time_s"
    assert len(lines) == 1 + 2 * 2
    assert "DKRR-S" in plot.read_text()


def test_experiment_no_timing_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["experiment", "--N", "48", "--m-grid", "2,3", "--repetitions", "2", "--no-timing"]
    assert run(*common, "--out", str(a)).exit_code == 0
    assert run(*common, "--out", str(b), "--workers", "2").exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_experiment_partition_flag_overrides_grid(tmp_path):
    out = tmp_path / "r.csv"
    res = run("experiment", "--N", "40", "--m-grid", "2,4", "--partitions", "5", "--repetitions", "1",
              "--kernel", "gaussian", "--method", "bckrr", "--out", str(out))
    assert res.exit_code == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 1 and rows[0].startswith("gaussian,bckrr,40,5,")


def test_rates_command(tmp_path):
    res = run("rates", "--N-values", "32,64,128", "--repetitions", "2", "--r-hint", "0.5", "--out", str(tmp_path / "r.csv"))
    assert res.exit_code == 0
    assert "slope=" in res.output and "expected_slope=-0.5000" in res.output


def test_tune_command():
    res = run("tune", "--N", "60", "--partitions", "2", "--alpha-min", "0.2", "--alpha-max", "0.6", "--alpha-step", "0.2")
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert lines[0] == "partition,n,alpha,lambda_local,loo_mse,selected,lambda_under"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 2 * 3
    selected = [r for r in rows if r[5] == "1"]
    assert len(selected) == 2
    for r in selected:
        assert float(r[6]) == pytest.approx(60 ** -float(r[2]), rel=1e-12)
