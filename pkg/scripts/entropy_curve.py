#!/usr/bin/env python3
"""ME packet entropy against nu: closed form, Fock-basis spectrum and maxent solve."""

import argparse

import numpy as np

from emergence.hilbert import von_neumann_entropy
from emergence.maxent import MaxEntProblem, solve_maxent, trace_distance
from emergence.mepacket import Moments, me_entropy_closed_form, me_packet


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nus", type=float, nargs="+", default=[1.01, 1.1, 1.5, 2, 3, 5, 8, 12])
    ap.add_argument("--hbar", type=float, default=1.0)
    args = ap.parse_args()

    print(f"{'nu':>6} {'S_closed':>12} {'S_fock':>12} {'S_maxent':>12} {'distance':>10} {'dim':>4}")
    for nu in args.nus:
        d = np.sqrt(nu * args.hbar / 2)
        m = Moments.single(0.0, 0.0, d, d, args.hbar)
        rho = me_packet(m)
        sol = solve_maxent(MaxEntProblem(m))
        print(f"{nu:6.2f} {me_entropy_closed_form(nu):12.9f} {von_neumann_entropy(rho):12.9f} "
              f"{sol.entropy:12.9f} {trace_distance(sol.state, rho):10.2e} {rho.dim:4d}")


if __name__ == "__main__":
    main()
