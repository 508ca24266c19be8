#!/usr/bin/env python3
"""Disturbance of a probe in D = (-4, 4) by an identical partner at distance L.

Global position picks up the partner's mean; the restricted probe only sees
the partner's tail inside D, so it falls off like a Gaussian tail.
"""

import argparse

import numpy as np

from emergence.hilbert import build_grid, wavefunction_from_samples
from emergence.identicals import (
    Region,
    disturbance,
    mass_in_region,
    position_kernel,
    restrict_to_region,
)


def gaussian(g, center, spread):
    return wavefunction_from_samples(g, np.exp(-((g.x - center) ** 2) / (4 * spread ** 2)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spread", type=float, default=0.5)
    ap.add_argument("--distances", type=float, nargs="+", default=[2, 4, 5, 6, 7, 8, 10, 12])
    args = ap.parse_args()

    g = build_grid(-16, 24, 512)
    D = Region.interval(-4, 4)
    q = position_kernel(g)
    local = restrict_to_region(q, D)
    psi = gaussian(g, 0.0, args.spread)
    print(f"{'L':>5} {'mass_in_D':>11} {'global(+)':>11} {'local(+)':>11} {'local(-)':>11}")
    for L in args.distances:
        phi = gaussian(g, L, args.spread)
        print(f"{L:5.1f} {mass_in_region(phi, D):11.3e} {disturbance(psi, phi, 1, q):11.6f} "
              f"{disturbance(psi, phi, 1, local):11.3e} {disturbance(psi, phi, -1, local):11.3e}")


if __name__ == "__main__":
    main()
