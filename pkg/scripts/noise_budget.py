"""Per-source noise budget of the teleportation scheme at a few frequencies."""

import argparse

import numpy as np

from qtsqueeze.budget import COMPONENTS, baseline_fds_budget, qt_budget
from qtsqueeze.tp_core import FrequencyGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--freqs", default="5,8,10,20,50,100,300", help="comma list in Hz")
    args = ap.parse_args()
    f = np.array([float(x) for x in args.freqs.split(",")])
    grid = FrequencyGrid(2 * np.pi * f)
    for budget in (qt_budget(grid=grid), baseline_fds_budget(squeeze_db=10.0, grid=grid)):
        print(f"\n{budget.label}: fraction of total strain PSD")
        comps = [c for c in COMPONENTS if c in budget.components]
        print("  f[Hz]  " + "".join(f"{c:>10}" for c in comps) + "   improvement[dB]")
        for k, fk in enumerate(f):
            row = "".join(f"{budget.components[c][k] / budget.total[k]:10.3f}" for c in comps)
            print(f"{fk:7.1f}  {row}   {budget.improvement_db()[k]:8.2f}")


if __name__ == "__main__":
    main()
