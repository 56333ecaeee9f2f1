"""Maps that sit just outside the hypotheses of the convergence theorem.

* exp-drift   x + e^{-x}: strictly nonexpansive on [0, inf) but without a fixed
                point; its orbit creeps off to infinity like log n.
* rotation    an isometry of the disk: unique fixed point 0, yet the strict
                inequality fails with equality for every pair and orbits cycle.
* identity    nonexpansive with every point fixed; multi-start finds many limits.
* saturating  x / (1 + x): strictly nonexpansive, converges, but no Banach
                constant works near 0.

    python3 scripts/counterexample_gallery.py --seed 7 --pairs 10000
"""
import argparse
import math

import numpy as np

from fixlab.classifier import ClassSpec, check_class, classify_all, sample_pair_arrays
from fixlab.iteration import StoppingConfig, multi_start_uniqueness, run, seeded_starts
from fixlab.mappings import MappingSpec
from fixlab.metric import SpaceDescriptor


def show(certs) -> str:
    return ", ".join(f"{c.class_id}={c.verdict}" for c in certs if c.verdict != "skipped")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--pairs", type=int, default=10_000)
    args = ap.parse_args()

    print("exp-drift")
    drift = MappingSpec("exp-drift")
    for n in (10**3, 10**4, 10**5):
        report, _ = run(drift, SpaceDescriptor(dim=1, nonnegative=True), [0.0], StoppingConfig(max_iter=n))
        x = float(report.final_point.coords[0])
        print(f"  n={n:>6}: status={report.status}, x_n={x:.4f}, log(n)={math.log(n):.4f}")
    interval = SpaceDescriptor.interval(20.0)
    cert = check_class(drift, ClassSpec("strict"), sample_pair_arrays(interval, args.pairs, args.seed), space=interval)
    print(f"  strict on [0,20]: {cert.verdict}, max_ratio={cert.max_ratio:.6f}")

    print("rotation (theta = pi/4)")
    rot = MappingSpec("rotation", {"theta": math.pi / 4})
    disk = SpaceDescriptor(dim=2, ball_radius=1.0)
    print("  ", show(classify_all(rot, disk, args.pairs, args.seed)))
    report, trace = run(rot, disk, [0.6, 0.0], StoppingConfig(max_iter=200))
    print(f"  orbit of (0.6, 0): status={report.status}, step distances all {np.ptp(trace.step_distance):.1e} apart")

    print("identity")
    ident = MappingSpec("identity")
    space = SpaceDescriptor(dim=3, ball_radius=1.0)
    result = multi_start_uniqueness(ident, space, seeded_starts(space, 5, args.seed), StoppingConfig(), tol=1e-6)
    print(f"  multi-start verdict={result.verdict}, pairwise max={result.pairwise_max:.3f}")

    print("saturating")
    sat = MappingSpec("saturating")
    for upper in (10.0, 1.0, 0.01):
        iv = SpaceDescriptor.interval(upper)
        cert = check_class(sat, ClassSpec("banach"), sample_pair_arrays(iv, args.pairs, args.seed), space=iv)
        print(f"  on [0,{upper:g}]: Banach max_ratio={cert.max_ratio:.6f}")


if __name__ == "__main__":
    main()
