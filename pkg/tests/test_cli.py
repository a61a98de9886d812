import csv
import io
import json

import pytest

from aoicred import aoi_of_threshold, SystemConfig
from aoicred.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, OUTPUT_ENV, main
from oracles import AOI_XI, grid_min

SINGLE = {"service": {"parameter": 1.0}, "processes": [{"rate": 9.0, "alpha": 1.0, "beta": 1.0}]}
PAIR = {
    "service": {"parameter": 1.5},
    "processes": [{"rate": 6.0, "alpha": 0.3, "beta": 0.5}, {"rate": 6.0, "alpha": 2.0, "beta": 0.5}],
}


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="cfg.json"):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(p)

    return _write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_single_matches_grid(write, capsys):
    code, out, _ = run(["solve-single", write(SINGLE)], capsys)
    assert code == EXIT_OK
    sol = json.loads(out)["solution"]
    cfg = SystemConfig.single(9.0, 1.0)
    _, best = grid_min(lambda x: aoi_of_threshold(cfg, x))
    assert sol["aoi"] <= best + 1e-9
    assert sol["aoi"] == pytest.approx(best, rel=1e-6)


def test_solve_single_curve_and_file(write, tmp_path, capsys):
    target = tmp_path / "out" / "sol.json"
    code, _, _ = run(["solve-single", write(SINGLE), "--beta", "0.5", "--emit-curve", "--curve-points", "11", "-o", str(target)], capsys)
    assert code == EXIT_OK
    doc = json.loads(target.read_text())
    assert doc["mode"] == "weighted" and len(doc["curve"]) == 11
    assert doc["solution"]["objective"] == pytest.approx(2.2204759, abs=1e-6)


def test_tau_zero_is_infeasible(write, capsys):
    code, _, err = run(["solve-single", write(SINGLE), "--tau", "0"], capsys)
    assert code == EXIT_INFEASIBLE
    assert "not attainable" in err


def test_binding_tau(write, capsys):
    code, out, _ = run(["solve-single", write(SINGLE), "--tau", "0.2"], capsys)
    sol = json.loads(out)["solution"]
    assert code == EXIT_OK and sol["gamma_active"] and sol["err"] == pytest.approx(0.2, abs=1e-8)


def test_malformed_json(write, capsys):
    code, _, err = run(["solve-single", write("{not json")], capsys)
    assert code == EXIT_CONFIG and "malformed" in err


def test_unknown_key_rejected(write, capsys):
    doc = dict(SINGLE, procesess=[])
    code, _, err = run(["solve-single", write(doc)], capsys)
    assert code == EXIT_CONFIG and "procesess" in err


def test_solve_single_needs_one_process(write, capsys):
    code, _, _ = run(["solve-single", write(PAIR)], capsys)
    assert code == EXIT_CONFIG


def test_simulate_single_ci_contains_oracle(write, capsys):
    argv = ["simulate", write(SINGLE), "--policy", "single", "--epochs", "1000000", "--seed", "4"]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    aoi = next(r for r in rows if r["metric"] == "aoi")
    assert float(aoi["ci95_low"]) - float(aoi["stderr"]) <= AOI_XI[0.0] <= float(aoi["ci95_high"]) + float(aoi["stderr"])
    assert abs(float(aoi["estimate"]) - AOI_XI[0.0]) < 3 * float(aoi["stderr"])
    code2, out2, _ = run(argv, capsys)
    assert out2 == out


def test_simulate_as_and_trace(write, tmp_path, capsys):
    trace = tmp_path / "t" / "trace.csv"
    out_path = tmp_path / "m.csv"
    code, _, _ = run(["simulate", write(PAIR), "--policy", "as", "--m", "2", "1", "--epochs", "2000", "--trace", str(trace), "-o", str(out_path)], capsys)
    assert code == EXIT_OK
    assert trace.read_text().startswith("process,i,S,S_prime")
    assert (tmp_path / "m.csv.manifest.json").exists()
    rows = list(csv.DictReader(io.StringIO(out_path.read_text())))
    assert [r["metric"] for r in rows] == ["aoi", "err", "aoi", "err", "objective"]


def test_simulate_rejects_zero_epochs(write, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", write(SINGLE), "--epochs", "0"])
    assert exc.value.code == 2


def test_simulate_wrong_m_length(write, capsys):
    code, _, _ = run(["simulate", write(PAIR), "--policy", "as", "--m", "1", "--epochs", "100"], capsys)
    assert code == EXIT_CONFIG


def test_optimize_commands(write, capsys):
    code, out, _ = run(["optimize-as", write(PAIR), "--m-max", "5"], capsys)
    assert code == EXIT_OK and len(json.loads(out)["schedule"]["m"]) == 2
    code, out, _ = run(["optimize-rr", write(PAIR), "--xi-max", "3", "--grid", "4", "--epochs", "2000"], capsys)
    assert code == EXIT_OK and 0 <= json.loads(out)["policy"]["xi"] <= 3


def test_optimize_rr_unequal_betas(write, capsys):
    doc = json.loads(json.dumps(PAIR))
    doc["processes"][1]["beta"] = 0.9
    code, _, _ = run(["optimize-rr", write(doc), "--epochs", "100"], capsys)
    assert code == EXIT_CONFIG


def test_experiment_creates_output_dir(tmp_path, capsys):
    outdir = tmp_path / "deep" / "res"
    code, out, _ = run(["experiment", "--fig", "5", "--output-dir", str(outdir), "--no-figure"], capsys)
    assert code == EXIT_OK
    assert (outdir / "fig5.csv").exists() and (outdir / "fig5.manifest.json").exists()
    assert "csv:" in out


def test_experiment_env_default(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "envdir"))
    code, _, _ = run(["experiment", "--fig", "5", "--no-figure", "--service-is-rate"], capsys)
    assert code == EXIT_OK
    assert (tmp_path / "envdir" / "fig5.csv").exists()


def test_experiment_unwritable_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(["experiment", "--fig", "5", "--no-figure", "--output-dir", str(blocker / "sub")], capsys)
    assert code == EXIT_IO and "I/O" in err


def test_experiment_with_sweep_config(write, tmp_path, capsys):
    doc = {"sweep": {"betas": [0.5, 1.0], "alphas": [1.0]}, "seed": 3}
    code, _, _ = run(["experiment", write(doc), "--fig", "3", "--output-dir", str(tmp_path / "r"), "--no-figure"], capsys)
    assert code == EXIT_OK
    lines = (tmp_path / "r" / "fig3.csv").read_text().splitlines()
    assert len(lines) == 1 + 3
