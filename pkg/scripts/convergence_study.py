#!/usr/bin/env python3
"""Time-step convergence of the harmonic kernel and of the classical-path solver."""
import argparse

import numpy as np

from pathlab.classical import analytic_classical_path, solve_classical_path
from pathlab.experiments import mid_domain_error
from pathlab.grid import PhysicalConstants, Potential, SpaceGrid, TimeGrid
from pathlab.propagator import alias_ratio, analytic_kernel, lattice_kernel


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--duration", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=1201)
    ap.add_argument("--slices", type=int, nargs="+", default=[1, 2, 4, 8])
    args = ap.parse_args(argv)

    c = PhysicalConstants()
    p = Potential.harmonic(args.omega)
    sg = SpaceGrid(-8, 8, args.points, edge_taper=0.1)
    ref = analytic_kernel(sg, TimeGrid(0, args.duration, 1), p, c)
    print("kernel: n_slices  alias_ratio  max_mid_rel_error  observed_order")
    prev = None
    for n in args.slices:
        tg = TimeGrid(0, args.duration, n)
        err = mid_domain_error(lattice_kernel(sg, tg, p, c), ref)
        order = np.log2(prev / err) if prev else float("nan")
        print(f"  {n:8d}  {alias_ratio(sg, tg.dt, c):11.3f}  {err:17.4e}  {order:14.2f}")
        prev = err

    print("solver: n_slices  max_error  error/dt^2")
    for n in (8, 16, 32, 64, 128):
        tg = TimeGrid(0, args.duration, n)
        x = solve_classical_path(0.0, 1.0, tg, p, c).path.positions
        err = np.max(np.abs(x - analytic_classical_path(p, 0.0, 1.0, tg.nodes, 0, args.duration)))
        print(f"  {n:8d}  {err:9.3e}  {err / tg.dt**2:10.4f}")


if __name__ == "__main__":
    main()
