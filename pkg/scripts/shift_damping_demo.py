"""Picard iteration of the coordinatewise damping map x_k -> k/(k+1) x_k.

The domain is the nonnegative part of the unit ball of l2 truncated to d
coordinates: bounded and closed, but (as d grows) far from compact.  The map
is strictly nonexpansive without being a Banach contraction, and every orbit
still converges to the origin, just slowly: the k-th coordinate decays like
(k/(k+1))^n.

    python3 scripts/shift_damping_demo.py --dim 100 --starts 20 --seed 2023
"""
import argparse

import numpy as np

from fixlab.iteration import StoppingConfig, monotone_max_series, run, seeded_starts, strict_step_violations
from fixlab.mappings import MappingSpec, apply_n, closed_form
from fixlab.metric import SpaceDescriptor, norm
from fixlab.scenario import sparkline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--starts", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2023)
    ap.add_argument("--eps", type=float, default=1e-7)
    ap.add_argument("--max-iter", type=int, default=5000)
    args = ap.parse_args()

    mapping = MappingSpec("shift-damping")
    space = SpaceDescriptor.unit_l2_positive(args.dim)
    cfg = StoppingConfig(eps=args.eps, max_iter=args.max_iter)

    print(f"{'start':>5} {'status':>10} {'iters':>6} {'|x_final|':>10} {'rate':>8} {'oracle err':>10} {'strict viol':>11}")
    for i, x0 in enumerate(seeded_starts(space, args.starts, args.seed)):
        report, trace = run(mapping, space, x0, cfg)
        oracle = closed_form(mapping, x0, 100).coords
        err = float(np.max(np.abs(apply_n(mapping, x0, 100).coords - oracle)))
        print(
            f"{i:>5} {report.status:>10} {report.iterations:>6} {norm(report.final_point):>10.3e} "
            f"{report.estimated_rate or float('nan'):>8.5f} {err:>10.1e} {strict_step_violations(trace):>11}"
        )
        if i == 0:
            first = (report, trace)

    report, trace = first
    series = monotone_max_series(trace, report.final_point, space)
    print("\nstep distances, start 0:   ", sparkline(trace.step_distance))
    print("monotone-max series, start 0:", sparkline(series))
    print(f"slowest mode (d/(d+1))^n at n={report.iterations}: {(args.dim / (args.dim + 1)) ** report.iterations:.3e}")


if __name__ == "__main__":
    main()
