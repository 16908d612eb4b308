"""Strain sensitivity of the ETLF configuration for the three squeezing schemes.

Writes a CSV (and an SVG when matplotlib is installed) to the output directory.
"""

import argparse
from pathlib import Path

import numpy as np

from qtsqueeze.budget import baseline_fds_budget, no_squeeze_budget, qt_budget
from qtsqueeze.tp_core import FrequencyGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--points", type=int, default=400)
    args = ap.parse_args()
    grid = FrequencyGrid.logspace_hz(1, 1000, args.points)
    curves = {
        "no_squeeze": no_squeeze_budget(grid=grid),
        "baseline_10dB": baseline_fds_budget(squeeze_db=10.0, grid=grid),
        "baseline_15dB": baseline_fds_budget(squeeze_db=15.0, grid=grid),
        "qt_15dB": qt_budget(grid=grid),
    }
    args.out.mkdir(parents=True, exist_ok=True)
    f = grid.hz
    np.savetxt(
        args.out / "sensitivity_curves.csv",
        np.column_stack([f] + [b.asd for b in curves.values()]),
        delimiter=",",
        header="frequency_Hz," + ",".join(curves),
        comments="",
    )
    band = (f >= 10) & (f <= 100)
    for name, b in curves.items():
        if name != "no_squeeze":
            imp = b.improvement_db()
            print(f"{name:>14}: improvement 10-100 Hz {imp[band].min():.2f} to {imp[band].max():.2f} dB")
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, b in curves.items():
        ax.loglog(f, b.asd, label=name)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("strain ASD [1/sqrt(Hz)]")
    ax.set_ylim(1e-25, 1e-20)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out / "sensitivity_curves.svg")


if __name__ == "__main__":
    main()
