"""Run execution, CSV/JSON export, plot data, batch grids, and replay."""

import csv
import json

import numpy as np
import pytest

from safectrl.errors import ValidationError
from safectrl.reporting import (RunSummary, execute_run, export_plot_data,
                                load_grid, read_trace_csv, run_batch,
                                summarize, trace_columns, write_aggregate_table,
                                write_summary_json, write_trace_csv)
from safectrl.scenarios import config_from_dict


def small_cfg(**kw):
    base = {"scenario": "synthetic2d", "horizon": 30, "seed": 1,
            "distribution": "uniform", "comparator": False}
    base.update(kw)
    return config_from_dict(base)


@pytest.fixture(scope="module")
def small_run():
    return execute_run(small_cfg())


class TestExecuteRun:
    def test_summary_fields(self, small_run):
        trace, summary, report = small_run
        assert report is None
        assert summary.violation_count == 0
        assert summary.cumulative_loss == pytest.approx(trace.cumulative_loss)
        assert summary.horizon == 30 and summary.seed == 1
        assert summary.code_version
        assert summary.regret is None and summary.bound is None

    def test_with_comparator(self):
        trace, summary, report = execute_run(small_cfg(horizon=15),
                                             with_comparator=True)
        assert report is not None
        assert summary.regret == pytest.approx(report.regret)
        assert summary.bound_slack >= 0.0

    def test_replay_bit_for_bit(self, small_run):
        trace1 = small_run[0]
        trace2, _, _ = execute_run(small_cfg())
        assert np.array_equal(trace1.states, trace2.states)
        assert np.array_equal(trace1.gains, trace2.gains)
        assert np.array_equal(trace1.losses, trace2.losses)

    def test_reference_loss_only_for_gaussian_quadrotor(self, small_run):
        assert small_run[1].reference_loss is None
        _, summary, _ = execute_run(config_from_dict(
            {"scenario": "quadrotor", "horizon": 10, "comparator": False}))
        assert summary.reference_loss == 44.05
        assert summary.reference_ratio_flag is not None


class TestTraceCsv:
    def test_round_trip_exact(self, small_run, tmp_path):
        trace = small_run[0]
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        data = read_trace_csv(path)
        assert np.array_equal(data["x"], trace.states[:-1])
        assert np.array_equal(data["u"], trace.inputs)
        assert np.array_equal(data["w"], trace.noises)
        assert np.array_equal(data["loss"], trace.losses)
        assert np.array_equal(data["zeta"], trace.zetas)
        assert np.array_equal(data["min_slack"], trace.min_slacks)
        assert np.array_equal(data["t"], np.arange(30))

    def test_column_schema(self):
        assert trace_columns(2, 1) == ["t", "x0", "x1", "u0", "w0", "w1",
                                       "loss", "zeta", "min_slack"]

    def test_bad_columns_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,a,b\n0,1,2\n")
        with pytest.raises(ValidationError):
            read_trace_csv(p)


class TestSummaryJson:
    def test_write_and_load(self, small_run, tmp_path):
        _, summary, _ = small_run
        path = write_summary_json(summary, tmp_path / "s.json")
        loaded = json.loads(path.read_text())
        assert loaded["cumulative_loss"] == pytest.approx(summary.cumulative_loss)
        assert loaded["violation_count"] == 0
        assert set(loaded) == set(RunSummary.__dataclass_fields__)


class TestPlotData:
    def test_series_and_monotonicity(self, small_run, tmp_path):
        trace = small_run[0]
        path = export_plot_data(trace, tmp_path / "plot.csv")
        rows = list(csv.DictReader(open(path)))
        by_series = {}
        for r in rows:
            by_series.setdefault(r["series"], []).append(float(r["value"]))
        assert set(by_series) == {"state_norm", "step_loss", "cumulative_loss"}
        assert all(len(v) == 30 for v in by_series.values())
        cum = by_series["cumulative_loss"]
        assert all(b >= a for a, b in zip(cum, cum[1:]))

    def test_regret_series_dominated_by_bound(self, tmp_path):
        trace, _, report = execute_run(small_cfg(horizon=15),
                                       with_comparator=True)
        path = export_plot_data(trace, tmp_path / "p.csv", reports=report)
        rows = list(csv.DictReader(open(path)))
        reg = [float(r["value"]) for r in rows
               if r["series"] == "cumulative_regret"]
        bound = [float(r["value"]) for r in rows if r["series"] == "bound"]
        assert len(reg) == 15 and len(bound) == 15
        assert all(b >= r for r, b in zip(reg, bound))


class TestBatch:
    def test_grid_and_outputs(self, tmp_path):
        grid = tmp_path / "grid.yaml"
        grid.write_text(
            "base:\n  scenario: synthetic2d\n  horizon: 20\n"
            "  comparator: false\n"
            "distributions: [gaussian, uniform]\nseeds: [0, 1]\n")
        configs = load_grid(grid)
        assert len(configs) == 4
        out = tmp_path / "out"
        summaries, failures = run_batch(configs, out)
        assert len(summaries) == 4 and not failures
        assert all(s.violation_count == 0 for s in summaries)
        csvs = sorted(out.glob("*seed*.csv"))
        jsons = sorted(out.glob("*.json"))
        assert len(csvs) == 4 and len(jsons) == 4
        agg = list(csv.reader(open(out / "aggregate.csv")))
        assert [r[0] for r in agg[1:]] == ["gaussian", "uniform"]

    def test_empty_grid(self, tmp_path):
        grid = tmp_path / "grid.yaml"
        grid.write_text("base:\n  scenario: synthetic2d\n  horizon: 10\n"
                        "  comparator: false\ndistributions: []\n")
        configs = load_grid(grid)
        summaries, failures = run_batch(configs, tmp_path / "out")
        assert summaries == [] and failures == []
        assert (tmp_path / "out" / "aggregate.csv").exists()

    def test_failures_recorded_batch_continues(self, tmp_path):
        good = small_cfg(horizon=10)
        bad = config_from_dict({
            "scenario": "custom", "horizon": 10,
            "a_matrix": [[1.2]], "b_matrix": [[0.0]],
            "state_bound": [10.0], "input_bound": [2.0],
            "noise_bound": 0.1, "kappa": 3.0, "gamma": 0.5,
            "comparator": False})
        out = tmp_path / "out"
        summaries, failures = run_batch([bad, good], out)
        assert len(summaries) == 1 and len(failures) == 1
        assert (out / "failures.json").exists()

    def test_unknown_grid_keys(self, tmp_path):
        grid = tmp_path / "grid.yaml"
        grid.write_text("base:\n  scenario: synthetic2d\n  horizon: 10\n"
                        "gammas: [0.1]\n")
        with pytest.raises(ValidationError):
            load_grid(grid)


class TestAggregateTable:
    def test_reference_column(self, tmp_path):
        cfg = config_from_dict({"scenario": "quadrotor", "horizon": 10,
                                "comparator": False})
        _, summary, _ = execute_run(cfg)
        path = write_aggregate_table([summary], tmp_path / "agg.csv")
        rows = list(csv.reader(open(path)))
        assert rows[0][-2:] == ["reference_loss", "reference_ratio_flag"]
        assert rows[1][0] == "gaussian"
        assert rows[1][-2] == "44.05"
