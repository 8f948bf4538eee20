"""Hovering quadrotor under bounded noise: zero constraint violations.

Runs the quadrotor preset (6 states, 3 inputs, box constraints on both) for
T=500 steps under each noise family and prints a per-run safety summary.
Writes the gaussian trace CSV and long-format plot data next to this script.
"""

from pathlib import Path

from safectrl.noise import FAMILIES
from safectrl.reporting import execute_run, export_plot_data, write_trace_csv
from safectrl.scenarios import config_from_dict

OUT = Path(__file__).parent / "out"


def main():
    OUT.mkdir(exist_ok=True)
    print(f"{'distribution':<14} {'loss':>10} {'max ||x||':>10} "
          f"{'max ||u||':>10} {'violations':>10}")
    for dist in FAMILIES:
        cfg = config_from_dict({"scenario": "quadrotor", "horizon": 500,
                                "seed": 0, "distribution": dist,
                                "comparator": False})
        trace, summary, _ = execute_run(cfg)
        print(f"{dist:<14} {summary.cumulative_loss:>10.4f} "
              f"{summary.max_state_norm:>10.4f} "
              f"{summary.max_input_norm:>10.4f} "
              f"{summary.violation_count:>10d}")
        if dist == "gaussian":
            write_trace_csv(trace, OUT / "quadrotor_gaussian.csv")
            export_plot_data(trace, OUT / "quadrotor_gaussian_plot.csv")
    print(f"\ntrace and plot data written to {OUT}/")


if __name__ == "__main__":
    main()
