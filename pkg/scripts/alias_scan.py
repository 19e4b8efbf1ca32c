#!/usr/bin/env python3
"""Free-kernel error against the alias ratio m W dx / (2 pi hbar dt).

Once the ratio passes 1 the grid can no longer resolve the short-time
chirp and the slice products grow geometrically.
"""
import argparse
import csv
import sys
import warnings

from pathlab.experiments import mid_domain_error
from pathlab.grid import PhysicalConstants, Potential, SpaceGrid, TimeGrid
from pathlab.propagator import AliasingWarning, alias_ratio, analytic_kernel, lattice_kernel


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--half-width", type=float, default=8.0)
    ap.add_argument("--points", type=int, nargs="+", default=[401, 801, 1201])
    ap.add_argument("--slices", type=int, nargs="+", default=[2, 4, 8, 16, 32])
    ap.add_argument("--taper", type=float, default=0.1)
    args = ap.parse_args(argv)

    c = PhysicalConstants()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n_points", "n_slices", "alias_ratio", "max_mid_rel_error"])
    warnings.simplefilter("ignore", AliasingWarning)
    for n_points in args.points:
        sg = SpaceGrid(-args.half_width, args.half_width, n_points, args.taper)
        ref = analytic_kernel(sg, TimeGrid(0, 1, 1), Potential.free(), c)
        for n in args.slices:
            k = lattice_kernel(sg, TimeGrid(0, 1, n), Potential.free(), c)
            w.writerow([n_points, n, f"{alias_ratio(sg, 1 / n, c):.4g}",
                        f"{mid_domain_error(k, ref):.4g}"])


if __name__ == "__main__":
    main()
