"""Quantum and classical evolution of packet moments.

The quantum engine propagates a state operator exactly through one
diagonalization of the grid Hamiltonian.  The classical engine pushes a
Monte Carlo ensemble drawn from the packet's Gaussian phase-space density
through a velocity-Verlet integrator.  Both report Q, P, dQ, dP on a shared
time grid so that they can be compared directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from .errors import (
    GridMismatch,
    InputError,
    NonFinite,
    ResolutionInsufficient,
)
from .hilbert import (
    GridBasis,
    Operator,
    StateOperator,
    build_grid,
    hermitize,
    kinetic_square,
    quadratures,
)
from .mepacket import Moments, me_packet

MAX_GRID = 2048
CHUNK = 1 << 16


@dataclass(frozen=True)
class PotentialSpec:
    """A polynomial potential ``V(q) = sum_k coeffs[k] q**k``.

    Use the named constructors; ``kind`` is kept for reporting.
    """

    kind: str
    coeffs: tuple = ()
    mass: float = 1.0
    params: tuple = ()

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if not self.mass > 0:
            raise InputError("mass must be positive")
        if not all(math.isfinite(x) for x in c):
            raise InputError("potential coefficients must be finite")
        if len(c) > 9:
            raise InputError("polynomial degree must be <= 8")
        if self.kind != "free":
            nz = [k for k, x in enumerate(c) if x != 0.0]
            if not nz or nz[-1] % 2 or c[nz[-1]] <= 0:
                raise InputError(f"{self.kind} potential is not confining")

    @classmethod
    def free(cls, mass=1.0):
        return cls("free", (), mass)

    @classmethod
    def harmonic(cls, omega=1.0, mass=1.0):
        return cls("harmonic", (0.0, 0.0, 0.5 * mass * omega ** 2), mass, (omega,))

    @classmethod
    def quartic(cls, lam4=0.1, mass=1.0):
        """Anharmonic oscillator m q^2/2 + lam4 q^4."""
        return cls("quartic", (0.0, 0.0, 0.5 * mass, 0.0, lam4), mass, (lam4,))

    @classmethod
    def double_well(cls, a=1.0, b=0.1, mass=1.0):
        """-a q^2 + b q^4, minima at q = +-sqrt(a / 2b)."""
        return cls("double_well", (0.0, 0.0, -a, 0.0, b), mass, (a, b))

    @classmethod
    def polynomial(cls, coeffs, mass=1.0):
        return cls("polynomial", tuple(coeffs), mass)

    @property
    def is_quadratic(self) -> bool:
        return all(x == 0.0 for x in self.coeffs[3:])

    def value(self, q):
        return np.polynomial.polynomial.polyval(q, self.coeffs) if self.coeffs else np.zeros_like(q)

    def force(self, q):
        if len(self.coeffs) < 2:
            return np.zeros_like(q)
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return -np.polynomial.polynomial.polyval(q, d)

    def minimum(self) -> float:
        if self.kind == "free" or len(self.coeffs) < 2:
            return 0.0
        d = np.polynomial.polynomial.polyder(self.coeffs)
        roots = np.polynomial.polynomial.polyroots(d) if len(d) > 1 else np.array([0.0])
        real = roots[np.abs(roots.imag) < 1e-9].real
        return float(np.min(self.value(real))) if real.size else float(self.value(0.0))


@dataclass(eq=False)
class TrajectoryRecord:
    times: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    dQ: np.ndarray
    dP: np.ndarray
    engine: str
    metadata: dict = field(default_factory=dict)
    stderr: dict | None = None

    def __post_init__(self):
        for name in ("times", "Q", "P", "dQ", "dP"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(np.diff(self.times) <= 0):
            raise InputError("times must be strictly increasing")
        if np.any(self.dQ <= 0) or np.any(self.dP <= 0):
            raise InputError("spreads must stay positive")

    def moments_at(self, i: int) -> Moments:
        return Moments.single(self.Q[i], self.P[i], self.dQ[i], self.dP[i],
                              self.metadata.get("hbar", 1.0))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Phase-space samples.

    ``replicates > 1`` marks an ensemble made of that many independently
    randomized, equally sized blocks; standard errors then come from the
    spread of the block estimates instead of the i.i.d. formula.
    """

    q: np.ndarray
    p: np.ndarray
    seed: int
    sampler: str = "mc"
    replicates: int = 1

    def __len__(self):
        return self.q.shape[0]


# --- quantum engine -----------------------------------------------------------

def momentum_bound(v: PotentialSpec, m: Moments, sigmas: float = 6.0) -> float:
    """Largest momentum reachable from the sigmas-box around the packet."""
    Q, P, dQ, dP = m.as_row(0)
    p0 = abs(P) + sigmas * dP
    if v.kind == "free":
        return p0
    qs = np.array([Q - sigmas * dQ, Q + sigmas * dQ])
    e_pot = float(np.max(v.value(qs))) - v.minimum()
    return math.sqrt(p0 * p0 + 2 * v.mass * max(e_pot, 0.0))


def check_resolution(b: GridBasis, hbar: float, p_max: float):
    """Spacing must stay below a fifth of the shortest de Broglie wavelength."""
    limit = 0.2 * 2 * math.pi * hbar / p_max
    if b.spacing >= limit:
        raise ResolutionInsufficient(
            f"grid spacing {b.spacing:.4g} >= {limit:.4g} (p_max={p_max:.3g}, hbar={hbar:g})")


def build_hamiltonian(b: GridBasis, v: PotentialSpec, hbar: float, p_max: float | None = None) -> Operator:
    if p_max is not None:
        check_resolution(b, hbar, p_max)
    h = kinetic_square(b, hbar) / (2 * v.mass) + np.diag(v.value(b.x))
    return Operator(b, hermitize(h), True)


def auto_grid(v: PotentialSpec, m: Moments, t_end: float, sigmas: float = 7.0) -> GridBasis:
    """Smallest power-of-two grid that holds and resolves the evolving packet."""
    Q, P, dQ, dP = m.as_row(0)
    p_max = momentum_bound(v, m, sigmas)
    if v.kind == "free":
        half = abs(Q) + abs(P) * t_end / v.mass + sigmas * math.hypot(dQ, dP * t_end / v.mass)
    else:
        e_box = p_max ** 2 / (2 * v.mass) + v.minimum()
        # outermost classical turning point at the box energy
        c = np.array(v.coeffs, dtype=float)
        c[0] -= e_box
        roots = np.polynomial.polynomial.polyroots(c)
        real = roots[np.abs(roots.imag) < 1e-9].real
        half = max(float(np.max(np.abs(real))) if real.size else 0.0, abs(Q) + sigmas * dQ)
    half *= 1.05
    h_max = 0.9 * 0.2 * 2 * math.pi * m.hbar / p_max
    n = 64
    while 2 * half / (n - 1) >= h_max:
        n *= 2
        if n > MAX_GRID:
            raise ResolutionInsufficient(f"packet needs more than {MAX_GRID} grid points")
    return build_grid(-half, half, n)


def _eigh(m: np.ndarray):
    # grid Hamiltonians are real symmetric; the real solver is several times faster
    if np.max(np.abs(m.imag)) <= 1e-14 * max(1.0, np.max(np.abs(m.real))):
        return np.linalg.eigh(np.ascontiguousarray(m.real))
    return np.linalg.eigh(m)


def _rotate(vecs: np.ndarray, a: np.ndarray) -> np.ndarray:
    """vecs^dag a vecs, in real arithmetic when the eigenvectors are real."""
    if np.isrealobj(vecs):
        # strided .real/.imag views would miss the BLAS path
        re = vecs.T @ np.ascontiguousarray(a.real) @ vecs
        if not np.any(a.imag):
            return re
        return re + 1j * (vecs.T @ np.ascontiguousarray(a.imag) @ vecs)
    return vecs.conj().T @ a @ vecs


def evolve_quantum(rho0: StateOperator, H: Operator, t_grid, hbar: float) -> TrajectoryRecord:
    if rho0.basis != H.basis:
        raise InputError("state and Hamiltonian live in different bases")
    t_grid = np.asarray(t_grid, dtype=float)
    energies, vecs = _eigh(H.matrix)
    ops = quadratures(H.basis, hbar)
    rho_e = _rotate(vecs, rho0.matrix)
    # tr(rho(t) A) = sum_mn rho_mn A_nm exp(-i (E_m - E_n) t / hbar)
    contract = {name: rho_e * _rotate(vecs, getattr(ops, name).matrix).T
                for name in ("q", "p", "q2", "p2")}
    out = {name: np.empty(t_grid.size) for name in contract}
    for i, t in enumerate(t_grid):
        # the phase matrix factorizes: exp(-i E_m t) exp(+i E_n t)
        u = np.exp(-1j * energies * (t / hbar))
        for name, c in contract.items():
            out[name][i] = (u @ c @ u.conj()).real
    varq = out["q2"] - out["q"] ** 2
    varp = out["p2"] - out["p"] ** 2
    return TrajectoryRecord(t_grid, out["q"], out["p"], np.sqrt(varq), np.sqrt(varp), "quantum",
                            {"dim": H.dim, "hbar": hbar, "x_min": H.basis.x_min,
                             "x_max": H.basis.x_max})


def propagate(rho0: StateOperator, H: Operator, t: float, hbar: float) -> StateOperator:
    """The full state at one time (used for conservation checks)."""
    energies, vecs = _eigh(H.matrix)
    u = (vecs * np.exp(-1j * energies * t / hbar)) @ vecs.conj().T
    return StateOperator(rho0.basis, hermitize(u @ rho0.matrix @ u.conj().T))


# --- classical engine -----------------------------------------------------------

SAMPLERS = ("mc", "rqmc")
RQMC_REPLICATES = 16


def _normals(seed: int, n: int) -> np.ndarray:
    """(n, 2) i.i.d. standard normals; chunk c of CHUNK samples comes from Philox stream c."""
    root = np.random.Philox(key=seed)
    out = np.empty((n, 2))
    for c, start in enumerate(range(0, n, CHUNK)):
        stop = min(start + CHUNK, n)
        gen = np.random.Generator(root.jumped(c))
        out[start:stop] = gen.standard_normal((stop - start, 2))
    return out


def _sobol_normals(seed: int, n: int, replicates: int) -> np.ndarray:
    """Owen-scrambled Sobol blocks mapped to normals; block r is scrambled by Philox stream (seed, r)."""
    block = n // replicates
    if block * replicates != n or block < 2 or block & (block - 1):
        raise InputError(f"rqmc needs n = {replicates} * 2**k samples, got {n}")
    out = np.empty((n, 2))
    for r in range(replicates):
        # scipy spawns its scrambling stream from the seed sequence, so that must be fixed too
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(r,))))
        u = qmc.Sobol(2, scramble=True, rng=gen).random_base2(int(math.log2(block)))
        out[r * block:(r + 1) * block] = norm.ppf(np.clip(u, 1e-300, 1 - 1e-16))
    return out


def sample_ensemble(m: Moments, n: int, seed: int, sampler: str = "mc",
                    replicates: int = RQMC_REPLICATES) -> Ensemble:
    """Gaussian phase-space samples with mean (Q, P) and covariance diag(dQ^2, dP^2).

    ``sampler="mc"`` draws i.i.d. pseudo-random points.  ``"rqmc"`` uses
    randomized quasi-Monte Carlo, whose error for smooth moment integrands
    falls much faster than n**-0.5.
    """
    if n < 2:
        raise InputError("need at least two samples")
    if sampler not in SAMPLERS:
        raise InputError(f"unknown sampler {sampler!r}")
    seed = int(seed) & (2 ** 64 - 1)
    Q, P, dQ, dP = m.as_row(0)
    if sampler == "mc":
        z, replicates = _normals(seed, n), 1
    else:
        z = _sobol_normals(seed, n, replicates)
    return Ensemble(Q + dQ * z[:, 0], P + dP * z[:, 1], seed, sampler, replicates)


def _moments(q: np.ndarray, p: np.ndarray):
    mq, mp = np.mean(q), np.mean(p)
    dq, dp = q - mq, p - mp
    return {"Q": mq, "P": mp, "dQ": math.sqrt(np.mean(dq * dq)), "dP": math.sqrt(np.mean(dp * dp))}


def _iid_errors(q: np.ndarray, p: np.ndarray, est: dict) -> dict:
    n = q.size
    err = {}
    for name, x in (("Q", q), ("P", p)):
        dev = x - est[name]
        var = np.mean(dev * dev)
        m4 = np.mean(dev ** 4)
        sd = math.sqrt(var)
        err[name] = sd / math.sqrt(n)
        err["d" + name] = math.sqrt(max(m4 - var * var, 0.0) / n) / (2 * sd) if sd > 0 else 0.0
    return err


def ensemble_statistics(q: np.ndarray, p: np.ndarray, replicates: int = 1):
    """Moment estimates and their standard errors."""
    est = _moments(q, p)
    if replicates == 1:
        return est, _iid_errors(q, p, est)
    blocks = [_moments(bq, bp) for bq, bp in zip(np.split(q, replicates), np.split(p, replicates))]
    err = {k: float(np.std([b[k] for b in blocks], ddof=1) / math.sqrt(replicates)) for k in est}
    return est, err


def _step_counts(t_grid: np.ndarray, dt: float) -> np.ndarray:
    steps = np.rint(t_grid / dt).astype(np.int64)
    if np.any(np.abs(steps * dt - t_grid) > 1e-9 * np.maximum(1.0, np.abs(t_grid))) or np.any(steps < 0):
        raise InputError("recorded times must be non-negative multiples of dt")
    return steps


def evolve_classical(e: Ensemble, v: PotentialSpec, t_grid, dt: float) -> TrajectoryRecord:
    t_grid = np.asarray(t_grid, dtype=float)
    steps = _step_counts(t_grid, dt)
    q = e.q.copy()
    p = e.p.copy()
    rows = {k: np.empty(t_grid.size) for k in ("Q", "P", "dQ", "dP")}
    errs = {k: np.empty(t_grid.size) for k in rows}
    half = 0.5 * dt
    inv_m = 1.0 / v.mass
    done = 0
    f = v.force(q)
    for i, target in enumerate(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(target - done):
                p += half * f
                q += dt * inv_m * p
                f = v.force(q)
                p += half * f
        done = target
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise NonFinite(f"classical trajectories blew up before t={t_grid[i]}")
        s, se = ensemble_statistics(q, p, e.replicates)
        for k in rows:
            rows[k][i] = s[k]
            errs[k][i] = se[k]
    return TrajectoryRecord(t_grid, rows["Q"], rows["P"], rows["dQ"], rows["dP"], "classical",
                            {"n_samples": len(e), "seed": e.seed, "dt": dt,
                             "sampler": e.sampler}, errs)


def classical_energy(e: Ensemble, v: PotentialSpec) -> np.ndarray:
    return e.p ** 2 / (2 * v.mass) + v.value(e.q)


def leapfrog(q, p, v: PotentialSpec, dt: float, n_steps: int):
    """Plain velocity-Verlet on arrays; returns new (q, p)."""
    q = np.array(q, dtype=float)
    p = np.array(p, dtype=float)
    f = v.force(q)
    for _ in range(n_steps):
        p += 0.5 * dt * f
        q += dt * p / v.mass
        f = v.force(q)
        p += 0.5 * dt * f
    return q, p


# --- comparison -----------------------------------------------------------------

QUANTITIES = ("Q", "P", "dQ", "dP")


@dataclass
class Discrepancy:
    max_abs: dict
    aggregate: float
    per_time: dict
    stderr: dict | None = None

    def within_stderr(self, k: float = 5.0) -> bool:
        """Every difference inside k combined standard errors."""
        if self.stderr is None:
            raise InputError("neither record carries Monte Carlo errors")
        return all(np.all(self.per_time[n] <= k * self.stderr[n]) for n in QUANTITIES)


def compare_trajectories(a: TrajectoryRecord, b: TrajectoryRecord) -> Discrepancy:
    """Max-over-time differences; the aggregate scales Q, dQ by dQ(0) and P, dP by dP(0)."""
    if a.times.shape != b.times.shape or np.any(a.times != b.times):
        raise GridMismatch("records use different time grids")
    per_time = {n: np.abs(getattr(a, n) - getattr(b, n)) for n in QUANTITIES}
    max_abs = {n: float(np.max(d)) for n, d in per_time.items()}
    scale = {"Q": a.dQ[0], "dQ": a.dQ[0], "P": a.dP[0], "dP": a.dP[0]}
    aggregate = max(max_abs[n] / scale[n] for n in QUANTITIES)
    se = None
    if a.stderr is not None or b.stderr is not None:
        zero = {n: np.zeros_like(a.times) for n in QUANTITIES}
        ea, eb = a.stderr or zero, b.stderr or zero
        se = {n: np.hypot(ea[n], eb[n]) for n in QUANTITIES}
    return Discrepancy(max_abs, float(aggregate), per_time, se)


# --- classical-limit sweep --------------------------------------------------------

@dataclass
class SweepRow:
    hbar: float
    nu: float
    scale: float
    Q_disc: float
    P_disc: float
    dQ_disc: float
    dP_disc: float
    aggregate: float
    mc_error: float
    dim: int


@dataclass
class SweepTable:
    rows: list
    fitted_order: float
    mode: str
    records: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def fit_order(nu, aggregate) -> float:
    """p in aggregate ~ nu**(-p), least squares in log-log."""
    nu = np.asarray(nu, dtype=float)
    agg = np.asarray(aggregate, dtype=float)
    if nu.size < 2:
        return float("nan")
    slope = np.polyfit(np.log(nu), np.log(agg), 1)[0]
    return float(-slope)


def time_grid(t_end: float, dt: float, n_records: int = 31) -> np.ndarray:
    """n_records times from 0 to t_end snapped to multiples of dt."""
    steps = np.unique(np.rint(np.linspace(0.0, t_end, n_records) / dt).astype(np.int64))
    return steps * dt


def quantum_run(v: PotentialSpec, m: Moments, t_grid, grid: GridBasis | None = None) -> TrajectoryRecord:
    """Exact evolution of the ME packet for ``m``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if grid is None:
        grid = auto_grid(v, m, float(t_grid[-1]))
    H = build_hamiltonian(grid, v, m.hbar, momentum_bound(v, m))
    return evolve_quantum(me_packet(m, grid), H, t_grid, m.hbar)


def run_pair(v: PotentialSpec, m: Moments, t_grid, dt: float, n_samples: int, seed: int,
             grid: GridBasis | None = None, sampler: str = "mc"):
    """Quantum and classical records from the same initial moments."""
    quantum = quantum_run(v, m, t_grid, grid)
    ens = sample_ensemble(m, n_samples, seed, sampler)
    classical = evolve_classical(ens, v, t_grid, dt)
    return quantum, classical


def hbar_sweep(v: PotentialSpec, m: Moments, hbars=None, t_end: float = 3.0, dt: float = 2e-3,
               n_samples: int = 10 ** 6, seed: int = 0, scales=None, n_records: int = 31,
               sampler: str = "rqmc") -> SweepTable:
    """Discrepancy between the two engines as nu grows.

    Pass ``hbars`` to keep the spreads of ``m`` and lower hbar, or
    ``scales`` to keep ``m.hbar`` and multiply both spreads by each scale.
    """
    if (hbars is None) == (scales is None):
        raise InputError("give exactly one of hbars or scales")
    t_grid = time_grid(t_end, dt, n_records)
    points = []
    if hbars is not None:
        mode = "hbar"
        for h in hbars:
            points.append((Moments(m.Q, m.P, m.dQ, m.dP, float(h)), 1.0))
    else:
        mode = "scale"
        for s in scales:
            points.append((Moments(m.Q, m.P, tuple(s * x for x in m.dQ),
                                   tuple(s * x for x in m.dP), m.hbar), float(s)))
    rows = []
    records = []
    classical_runs = {}
    for mm, s in points:
        nu = float(mm.check()[0])
        quantum = quantum_run(v, mm, t_grid)
        # the classical run does not depend on hbar, only on the spreads
        key = (mm.Q, mm.P, mm.dQ, mm.dP)
        if key not in classical_runs:
            ens = sample_ensemble(mm, n_samples, seed, sampler)
            classical_runs[key] = evolve_classical(ens, v, t_grid, dt)
        classical = classical_runs[key]
        d = compare_trajectories(quantum, classical)
        scale = {"Q": quantum.dQ[0], "dQ": quantum.dQ[0], "P": quantum.dP[0], "dP": quantum.dP[0]}
        mc = max(float(np.max(d.stderr[n])) / scale[n] for n in QUANTITIES)
        rows.append(SweepRow(mm.hbar, nu, s, d.max_abs["Q"], d.max_abs["P"], d.max_abs["dQ"],
                             d.max_abs["dP"], d.aggregate, mc, quantum.metadata["dim"]))
        records.append((quantum, classical))
    order = fit_order([r.nu for r in rows], [r.aggregate for r in rows])
    return SweepTable(rows, order, mode, records)
