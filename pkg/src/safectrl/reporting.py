"""Run execution helpers, CSV/JSON export, batch grids, and plot data.

Trace CSV columns are fixed as
``t, x[0..d_x-1], u[0..d_u-1], w[0..d_x-1], loss, zeta, min_slack``;
summary JSON keys follow RunSummary field names.
"""

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .controller import run as controller_run
from .errors import SafectrlError, ValidationError
from .regret import compute_comparators, dynamic_regret
from .scenarios import (QUADROTOR_GAUSSIAN_REFERENCE_LOSS, build_scenario,
                        config_from_dict)


@dataclass(frozen=True)
class RunSummary:
    scenario: str
    distribution: str
    distribution_params: dict
    seed: int
    horizon: int
    eta: float
    kappa: float
    gamma: float
    system_seed: int
    weights: str
    cumulative_loss: float
    max_state_norm: float
    max_input_norm: float
    violation_count: int
    set_variation: float
    wall_clock: float
    zero_in_first_set: bool
    code_version: str
    regret: float = None
    path_length: float = None
    bound: float = None
    bound_slack: float = None
    reference_loss: float = None
    reference_ratio_flag: bool = None

    def to_dict(self):
        return dataclasses.asdict(self)


def execute_run(cfg, with_comparator=None):
    """Run one scenario config; returns (trace, summary, regret report or None)."""
    scenario = build_scenario(cfg)
    trace = controller_run(scenario.sys, scenario.safety, scenario.loss,
                           scenario.noise, scenario.controller,
                           fixed_set=scenario.fixed_set)
    if with_comparator is None:
        with_comparator = cfg.comparator
    report = None
    if with_comparator:
        comparators = compute_comparators(
            trace, scenario.sys, scenario.safety, scenario.loss,
            scenario.consts, scenario.controller.projection,
            fixed_set=scenario.fixed_set,
            weight=scenario.controller.contraction_weight)
        report = dynamic_regret(trace, comparators, scenario.sys,
                                scenario.loss, scenario.consts)
    summary = summarize(cfg, trace, report)
    return trace, summary, report


def summarize(cfg, trace, report=None):
    ref = None
    flag = None
    if cfg.scenario == "quadrotor" and cfg.distribution == "gaussian":
        ref = QUADROTOR_GAUSSIAN_REFERENCE_LOSS
        ratio = trace.cumulative_loss / ref if ref else np.inf
        flag = bool(ratio > 10.0 or ratio < 0.1)
    return RunSummary(
        scenario=cfg.scenario, distribution=cfg.distribution,
        distribution_params=dict(cfg.distribution_params), seed=cfg.seed,
        horizon=cfg.horizon, eta=trace.eta, kappa=cfg.kappa, gamma=cfg.gamma,
        system_seed=cfg.system_seed, weights=cfg.weights,
        cumulative_loss=trace.cumulative_loss,
        max_state_norm=trace.max_state_norm,
        max_input_norm=trace.max_input_norm,
        violation_count=trace.violation_count,
        set_variation=trace.set_variation,
        wall_clock=trace.wall_clock,
        zero_in_first_set=trace.zero_in_first_set,
        code_version=__version__,
        regret=None if report is None else report.regret,
        path_length=None if report is None else report.path_length,
        bound=None if report is None else report.bound,
        bound_slack=None if report is None else report.slack,
        reference_loss=ref, reference_ratio_flag=flag)


def trace_columns(d_x, d_u):
    return (["t"] + [f"x{i}" for i in range(d_x)] + [f"u{j}" for j in range(d_u)]
            + [f"w{i}" for i in range(d_x)] + ["loss", "zeta", "min_slack"])


def write_trace_csv(trace, path):
    d_x = trace.states.shape[1]
    d_u = trace.inputs.shape[1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_columns(d_x, d_u))
        for t in range(trace.horizon):
            writer.writerow(
                [t] + [repr(float(v)) for v in trace.states[t]]
                + [repr(float(v)) for v in trace.inputs[t]]
                + [repr(float(v)) for v in trace.noises[t]]
                + [repr(float(trace.losses[t])), repr(float(trace.zetas[t])),
                   repr(float(trace.min_slacks[t]))])
    return path


def read_trace_csv(path):
    """Returns a dict of arrays keyed by the fixed column groups."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows)
    d_x = sum(1 for c in header if c.startswith("x"))
    d_u = sum(1 for c in header if c.startswith("u"))
    if header != trace_columns(d_x, d_u):
        raise ValidationError(f"unexpected trace columns in {path}")
    i = 1
    out = {"t": data[:, 0].astype(int)}
    for name, width in (("x", d_x), ("u", d_u), ("w", d_x)):
        out[name] = data[:, i:i + width]
        i += width
    out["loss"], out["zeta"], out["min_slack"] = data[:, i], data[:, i + 1], data[:, i + 2]
    return out


def write_summary_json(summary, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2, default=float)
        fh.write("\n")
    return path


def export_plot_data(traces, path, reports=None):
    """Long-format CSV of (t, series, value) for one or more traces.

    Series: state_norm, step_loss, cumulative_loss; with a regret report also
    cumulative_regret and bound (the bound evaluated at the running horizon).
    """
    if not isinstance(traces, (list, tuple)):
        traces = [traces]
    if reports is not None and not isinstance(reports, (list, tuple)):
        reports = [reports]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "series", "value"])
        for idx, trace in enumerate(traces):
            tag = "" if len(traces) == 1 else f"run{idx}/"
            cum = np.cumsum(trace.losses)
            norms = np.linalg.norm(trace.states[:-1], axis=1)
            for t in range(trace.horizon):
                writer.writerow([t, f"{tag}state_norm", repr(float(norms[t]))])
                writer.writerow([t, f"{tag}step_loss", repr(float(trace.losses[t]))])
                writer.writerow([t, f"{tag}cumulative_loss", repr(float(cum[t]))])
            if reports is not None and idx < len(reports) and reports[idx]:
                rep = reports[idx]
                cum_reg = np.cumsum(rep.algorithm_losses - rep.comparator_losses)
                for t in range(trace.horizon):
                    writer.writerow([t, f"{tag}cumulative_regret",
                                     repr(float(cum_reg[t]))])
                    writer.writerow([t, f"{tag}bound", repr(float(rep.bound))])
    return path


def load_grid(path):
    import yaml

    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "base" not in raw:
        raise ValidationError("grid file must contain a 'base' mapping")
    base = raw["base"]
    dists = raw.get("distributions", [base.get("distribution", "gaussian")])
    seeds = raw.get("seeds", [base.get("seed", 0)])
    etas = raw.get("etas", [base.get("eta")])
    unknown = set(raw) - {"base", "distributions", "seeds", "etas"}
    if unknown:
        raise ValidationError(f"unknown grid keys: {sorted(unknown)}")
    configs = []
    for dist in dists:
        for seed in seeds:
            for eta in etas:
                spec = dict(base)
                spec.update({"distribution": dist, "seed": seed})
                if eta is not None:
                    spec["eta"] = eta
                configs.append(config_from_dict(spec))
    return configs


def run_batch(configs, out_dir):
    """Execute a list of configs; write per-run trace CSV + summary JSON and
    an aggregate table (rows: distributions, columns: runs per distribution).
    Per-run failures are recorded and the batch continues."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = []
    failures = []
    for i, cfg in enumerate(configs):
        stem = f"{cfg.scenario}_{cfg.distribution}_seed{cfg.seed}_{i:03d}"
        try:
            trace, summary, report = execute_run(cfg)
        except SafectrlError as exc:
            failures.append({"config_index": i, "distribution": cfg.distribution,
                             "seed": cfg.seed, "error": str(exc)})
            continue
        write_trace_csv(trace, out_dir / f"{stem}.csv")
        write_summary_json(summary, out_dir / f"{stem}.json")
        summaries.append(summary)
    write_aggregate_table(summaries, out_dir / "aggregate.csv")
    if failures:
        with open(out_dir / "failures.json", "w") as fh:
            json.dump(failures, fh, indent=2)
    return summaries, failures


def write_aggregate_table(summaries, path):
    """Distribution-by-run table of cumulative losses, with the reference
    value column for context where one exists."""
    by_dist = {}
    for s in summaries:
        by_dist.setdefault(s.distribution, []).append(s)
    n_cols = max((len(v) for v in by_dist.values()), default=0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["distribution"] + [f"cumulative_loss_{i}" for i in range(n_cols)]
        header += ["reference_loss", "reference_ratio_flag"]
        writer.writerow(header)
        for dist in sorted(by_dist):
            runs = by_dist[dist]
            row = [dist] + [f"{s.cumulative_loss:.4f}" for s in runs]
            row += [""] * (n_cols - len(runs))
            ref = next((s.reference_loss for s in runs
                        if s.reference_loss is not None), "")
            flag = next((s.reference_ratio_flag for s in runs
                         if s.reference_ratio_flag is not None), "")
            writer.writerow(row + [ref, flag])
    return path
