import json

import pytest

from aoicred import experiments
from aoicred.experiments import (
    FIG3_HEADER,
    FIG4_HEADER,
    SweepSpec,
    default_betas,
    fig3_spec,
    fig4_spec,
    fig5_spec,
    point_seed,
    run_experiment,
)


def tiny_fig4(**kw):
    kw.setdefault("betas", (0.1, 0.9))
    return fig4_spec(alphas=(0.1, 50.0), cycles=3000, eval_cycles=3000, grid=5, m_max=4, **kw)


def test_default_betas():
    b = default_betas(25)
    assert len(b) == 25 and b[-1] == pytest.approx(1.0) and all(0 < x <= 1 for x in b)
    assert list(b) == sorted(b)


def test_point_seed_is_stable_and_distinct():
    assert point_seed(0, 3) == point_seed(0, 3)
    assert len({point_seed(0, i) for i in range(50)}) == 50


def test_spec_validation():
    with pytest.raises(ValueError):
        fig3_spec(betas=(0.0,))
    with pytest.raises(ValueError):
        fig3_spec(alphas=())
    with pytest.raises(ValueError):
        SweepSpec("fig9", fig3_spec().base)


def test_fig3_rows(tmp_path):
    out = run_experiment(fig3_spec(betas=(0.2, 0.6, 1.0)), tmp_path, figure=False)
    rows = out["rows"]
    assert len(rows) == 3 * 4
    assert {r["policy"] for r in rows} == {"threshold", "zero_wait"}
    header = out["csv"].read_text().splitlines()[0]
    assert header == ",".join(FIG3_HEADER)


def test_fig4_objective_column_consistent(tmp_path):
    out = run_experiment(tiny_fig4(), tmp_path, figure=False)
    rows = out["rows"]
    assert len(rows) == 2 * 2 * 2
    for r in rows:
        expect = r["beta"] * r["sum_aoi"] + (1 - r["beta"]) * r["sum_err"]
        assert abs(r["objective"] - expect) <= 1e-12 * abs(expect)
        assert (r["m1"] is None) == (r["policy"] == "RR")
    assert out["csv"].read_text().splitlines()[0] == ",".join(FIG4_HEADER)


def test_fig4_rerun_byte_identical(tmp_path):
    a = run_experiment(tiny_fig4(seed=5), tmp_path / "a", figure=False)
    b = run_experiment(tiny_fig4(seed=5), tmp_path / "b", figure=False)
    assert a["csv"].read_bytes() == b["csv"].read_bytes()


def test_threads_do_not_change_output(tmp_path):
    a = run_experiment(tiny_fig4(seed=2, betas=(0.5,)), tmp_path / "a", figure=False)
    b = run_experiment(tiny_fig4(seed=2, betas=(0.5,), threads=2), tmp_path / "b", figure=False)
    assert a["csv"].read_bytes() == b["csv"].read_bytes()


def test_fig5_rows_and_figure(tmp_path):
    out = run_experiment(fig5_spec(), tmp_path)
    assert [r["alpha1"] for r in out["rows"]] == list(experiments.FIG5_ALPHA1)
    assert out["figure"].exists() and out["figure"].stat().st_size > 0


def test_manifest_contents(tmp_path):
    out = run_experiment(fig5_spec(service_parameter_is_rate=True, seed=9), tmp_path, figure=False)
    man = json.loads(out["manifest"].read_text())
    assert man["experiment"] == "fig5"
    assert man["seed"] == 9
    assert man["config"]["service_parameter_is_rate"] is True
    assert man["config"]["service_mean"] == pytest.approx(0.02)
    assert man["config_sha256"] == experiments.config_hash(man["config"])
    assert man["csv"] == "fig5.csv"


def test_wrong_process_count_rejected():
    with pytest.raises(ValueError):
        experiments.run_fig3(SweepSpec("fig3", fig4_spec().base))
    with pytest.raises(ValueError):
        experiments.run_fig5(SweepSpec("fig5", fig3_spec().base, betas=(0.5,)))


def test_custom_kind_resolves_by_process_count():
    assert experiments.resolve_kind(SweepSpec("custom", fig3_spec().base)) == "fig3"
    assert experiments.resolve_kind(SweepSpec("custom", fig4_spec().base)) == "fig4"
