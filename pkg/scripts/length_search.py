"""Search integer length offsets that turn the interferometer into the two idler filters."""

import argparse

import numpy as np

from qtsqueeze.plant import PlantParams
from qtsqueeze.search import ETLF_FILTER_TARGETS, evaluate_candidate, search_lengths

TWO_PI = 2 * np.pi


def describe(tag, res, lam):
    print(f"{tag}: q={res.q} p={res.p} (dL_arm={res.dL_arm(lam) * 1e2:+.3f} cm, dL_SEC={res.dL_SEC(lam) * 1e2:+.3f} cm)")
    print(f"  Delta_a = {res.Delta_a / TWO_PI / 1e6:.3f} MHz, Delta_v = {res.Delta_v / TWO_PI / 1e6:.3f} MHz")
    ga, da = (x / TWO_PI for x in res.achieved_a)
    gv, dv = (x / TWO_PI for x in res.achieved_v)
    print(f"  Alice ({ga:.3f}, {da:.3f}) Hz, Victor ({gv:.3f}, {dv:.3f}) Hz")
    print(f"  target error {res.target_error:.2e}, max angle error {res.max_angle_error:.4f} rad")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-a", type=int, default=213)
    ap.add_argument("--n-v", type=int, default=642)
    ap.add_argument("--range", type=int, default=50000, help="half-width of the q and p ranges")
    args = ap.parse_args()
    base = PlantParams()
    res = search_lengths(
        base,
        ETLF_FILTER_TARGETS,
        n_a_range=(args.n_a, args.n_a),
        n_v_range=(args.n_v, args.n_v),
        q_range=(-args.range, args.range),
        p_range=(-args.range, args.range),
    )
    describe("best found", res, base.wavelength)
    ref = evaluate_candidate(base, -30000, 14030, args.n_a, args.n_v, ETLF_FILTER_TARGETS)
    describe(f"reference tuning (feasible={ref.feasible})", ref, base.wavelength)


if __name__ == "__main__":
    main()
