#!/usr/bin/env python3
"""Quantum vs classical moment discrepancy as hbar shrinks (or spreads grow).

    python scripts/classical_limit.py --potential quartic --hbars 1 0.5 0.25
    python scripts/classical_limit.py --scales 1 2 4 --sampler mc --samples 100000
"""

import argparse
import time

from emergence.dynamics import PotentialSpec, hbar_sweep
from emergence.mepacket import Moments

POTENTIALS = {
    "free": PotentialSpec.free,
    "harmonic": PotentialSpec.harmonic,
    "quartic": lambda: PotentialSpec.quartic(0.1),
    "double_well": lambda: PotentialSpec.double_well(1.0, 0.1),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--potential", choices=sorted(POTENTIALS), default="quartic")
    ap.add_argument("--moments", type=float, nargs=4, default=[0.0, 0.0, 1.0, 1.0],
                    metavar=("Q", "P", "dQ", "dP"))
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--hbars", type=float, nargs="+")
    mode.add_argument("--scales", type=float, nargs="+")
    ap.add_argument("--t-end", type=float, default=3.0)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--samples", type=int, default=2 ** 20)
    ap.add_argument("--sampler", choices=["mc", "rqmc"], default="rqmc")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    hbars = args.hbars if args.hbars or args.scales else [1.0, 0.5, 0.25]
    start = time.perf_counter()
    table = hbar_sweep(POTENTIALS[args.potential](), Moments.single(*args.moments),
                       hbars=hbars, scales=args.scales, t_end=args.t_end, dt=args.dt,
                       n_samples=args.samples, seed=args.seed, sampler=args.sampler)
    print(f"{'hbar':>7} {'scale':>6} {'nu':>7} {'aggregate':>11} {'mc_error':>10} {'grid':>5}")
    for r in table.rows:
        print(f"{r.hbar:7.4f} {r.scale:6.2f} {r.nu:7.3f} {r.aggregate:11.3e} {r.mc_error:10.2e} {r.dim:5d}")
    print(f"fitted order {table.fitted_order:.3f}  ({time.perf_counter() - start:.1f}s)")


if __name__ == "__main__":
    main()
