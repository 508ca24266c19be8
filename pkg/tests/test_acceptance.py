"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also collected in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from emergence.cli import main
from emergence.dynamics import (
    PotentialSpec,
    compare_trajectories,
    evolve_classical,
    hbar_sweep,
    quantum_run,
    sample_ensemble,
    time_grid,
)
from emergence.experiments import EXPERIMENTS
from emergence.hilbert import build_grid, projector, purity, von_neumann_entropy
from emergence.identicals import (
    KernelOperator,
    Region,
    brute_force_pair_average,
    disturbance,
    position_kernel,
    restrict_to_region,
    symmetrize,
    symmetrized_observable_average,
)
from emergence.maxent import MaxEntProblem, solve_maxent, trace_distance
from emergence.mepacket import (
    Moments,
    gaussian_packet,
    me_entropy_closed_form,
    me_packet,
    moments_of_state,
)
from emergence.hilbert import wavefunction_from_samples

from helpers import gaussian


def _specs():
    """Twelve packets: six nu values in [1.05, 12] at each hbar in {1, 0.5}."""
    out = []
    shapes = [(1.05, 1.0, 0.0, 0.0), (1.5, 2.0, 1.0, -0.5), (2.0, 0.5, -2.0, 1.0),
              (4.0, 1.0, 0.3, 0.7), (8.0, 3.0, -1.0, -1.0), (12.0, 0.4, 2.0, 0.0)]
    for hbar in (1.0, 0.5):
        for nu, ratio, Q, P in shapes:
            prod = nu * hbar / 2
            out.append(Moments.single(Q, P, math.sqrt(prod * ratio), math.sqrt(prod / ratio), hbar))
    return out


SPECS = _specs()


def test_criterion_1_moment_fidelity(record_criterion):
    start = time.perf_counter()
    worst = 0.0
    for m in SPECS:
        got = moments_of_state(me_packet(m))
        worst = max(worst, max(abs(a - b) for a, b in zip(got.as_row(), m.as_row())))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 10
    record_criterion(1, "moment fidelity", ok, f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_entropy(record_criterion):
    start = time.perf_counter()
    worst = max(abs(von_neumann_entropy(me_packet(m)) - me_entropy_closed_form(m.nu[0]))
                for m in SPECS)
    curve = [me_entropy_closed_form(nu) for nu in np.round(np.arange(1.1, 10.0 + 1e-9, 0.1), 10)]
    increasing = bool(np.all(np.diff(curve) > 0))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and increasing and elapsed < 5
    record_criterion(2, "entropy identity and monotonicity", ok,
                     f"max |S_num - S_closed| {worst:.2e}, increasing={increasing}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_pure_limit(record_criterion):
    start = time.perf_counter()
    g = build_grid(-12, 12, 256)
    p = purity(me_packet(Moments.single(0.0, 0.0, 1.0, 0.505), g))
    near = me_packet(Moments.single(0.0, 0.0, 1.0, 0.5005), g)
    pure = projector(gaussian_packet(Moments.single(0.0, 0.0, 1.0, 0.5), g))
    dist = trace_distance(near, pure)
    elapsed = time.perf_counter() - start
    ok = p >= 0.99 and dist < 6e-3 and elapsed < 5
    record_criterion(3, "nu -> 1 limit", ok, f"purity(1.01)={p:.6f}, distance(1.001)={dist:.2e}, {elapsed:.2f}s")
    assert ok


MAXENT_SPECS = [
    Moments.single(0.0, 0.0, 1.0, 1.0),
    Moments.single(1.0, -0.5, 0.8, 1.5),
    Moments.single(-2.0, 1.0, 2.0, 0.4),
    Moments.single(0.3, 0.3, 0.6, 1.0, hbar=0.5),
    Moments.single(0.0, 2.0, 3.0, 2.0),
    Moments.single(0.5, 0.0, 0.6, 0.9),
]


def test_criterion_4_maxent(record_criterion):
    start = time.perf_counter()
    dists, iters = [], []
    for m in MAXENT_SPECS:
        sol = solve_maxent(MaxEntProblem(m, max_iter=200))
        dists.append(trace_distance(sol.state, me_packet(m, sol.state.basis)))
        iters.append(sol.iterations)
    elapsed = time.perf_counter() - start
    ok = max(dists) < 1e-6 and max(iters) <= 200 and elapsed < 60
    record_criterion(4, "maxent oracle equivalence", ok,
                     f"max distance {max(dists):.2e}, iterations {iters}, {elapsed:.2f}s")
    assert ok


def test_criterion_5_quadratic_exactness(record_criterion):
    start = time.perf_counter()
    m = Moments.single(1.0, 0.5, 1.0, 1.0)
    t = time_grid(10.0, 5e-3, 41)
    worst = {}
    for v in (PotentialSpec.free(), PotentialSpec.harmonic()):
        quantum = quantum_run(v, m, t)
        classical = evolve_classical(sample_ensemble(m, 10 ** 5, seed=2024), v, t, 5e-3)
        d = compare_trajectories(quantum, classical)
        worst[v.kind] = max(float(np.max(d.per_time[k] / d.stderr[k])) for k in d.per_time)
    elapsed = time.perf_counter() - start
    ok = all(w < 5 for w in worst.values()) and elapsed < 60
    detail = ", ".join(f"{k} max |diff|/SE {w:.2f}" for k, w in worst.items())
    record_criterion(5, "quadratic-Hamiltonian exactness", ok, f"{detail}, {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_6_classical_limit(record_criterion):
    start = time.perf_counter()
    table = hbar_sweep(PotentialSpec.quartic(0.1), Moments.single(0.0, 0.0, 1.0, 1.0),
                       hbars=[1.0, 0.5, 0.25], t_end=3.0, dt=2e-3, n_samples=2 ** 20, seed=0,
                       sampler="rqmc")
    agg = table.column("aggregate")
    mc = table.column("mc_error")
    decreasing = bool(np.all(np.diff(agg) < 0))
    elapsed = time.perf_counter() - start
    ok = decreasing and 1.5 <= table.fitted_order <= 2.5 and elapsed < 600
    record_criterion(6, "classical-limit convergence", ok,
                     f"aggregate {np.array2string(agg, precision=5)}, MC error {mc.max():.1e}, "
                     f"order {table.fitted_order:.3f}, {elapsed:.1f}s")
    assert ok


def test_criterion_7_disturbance(record_criterion):
    start = time.perf_counter()
    g = build_grid(-16, 24, 512)
    psi, phi = gaussian(g, 0.0, 0.5), gaussian(g, 8.0, 0.5)
    q = position_kernel(g)
    local = restrict_to_region(q, Region.interval(-4, 4))
    glob = [disturbance(psi, phi, s, q) for s in (1, -1)]
    loc = [disturbance(psi, phi, s, local) for s in (1, -1)]
    elapsed = time.perf_counter() - start
    ok = all(abs(x - 8) < 1e-7 for x in glob) and max(loc) < 1e-9 and elapsed < 10
    record_criterion(7, "identical-particle disturbance", ok,
                     f"global {glob[0]:.10f}, restricted {max(loc):.1e}, {elapsed:.2f}s")
    assert ok


@pytest.mark.filterwarnings("ignore::emergence.errors.BoundaryLeak")
def test_criterion_8_brute_force(record_criterion):
    start = time.perf_counter()
    g = build_grid(-4, 4, 16)
    rng = np.random.default_rng(8)
    worst = 0.0
    cases = 0
    for _ in range(50):
        psi, phi = (wavefunction_from_samples(g, rng.normal(size=16) + 1j * rng.normal(size=16))
                    for _ in range(2))
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        A = KernelOperator(g, (a + a.conj().T) / 2)
        for sign in (1, -1):
            fast = symmetrized_observable_average(symmetrize(psi, phi, sign), A)
            worst = max(worst, abs(fast - brute_force_pair_average(psi, phi, sign, A)))
            cases += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 30
    record_criterion(8, "brute-force tensor equivalence", ok,
                     f"{cases} cases, max difference {worst:.1e}, {elapsed:.2f}s")
    assert ok


DETERMINISM_ARGS = {
    "classical-limit": ["potential=\"quartic\"", "n_samples=4096", "t_end=1.0", "n_records=6"],
}


def test_criterion_9_determinism(tmp_path, record_criterion):
    mismatched = []
    for kind in sorted(EXPERIMENTS):
        args = [kind, *DETERMINISM_ARGS.get(kind, []), "--seed", "77", "-q"]
        dirs = [tmp_path / kind / tag for tag in ("a", "b")]
        codes = [main([*args, "--out", str(d)]) for d in dirs]
        rerun = tmp_path / kind / "rerun"
        codes.append(main(["rerun", str(dirs[0] / "manifest.json"), "--out", str(rerun), "-q"]))
        names = sorted(p.name for p in dirs[0].iterdir() if p.name != "manifest.json")
        same = codes == [0, 0, 0] and bool(names) and all(
            (dirs[0] / n).read_bytes() == (d / n).read_bytes() for n in names for d in (dirs[1], rerun))
        if not same:
            mismatched.append(kind)
    ok = not mismatched
    record_criterion(9, "determinism", ok,
                     f"{len(EXPERIMENTS)} experiment kinds, mismatched: {mismatched or 'none'}")
    assert ok
