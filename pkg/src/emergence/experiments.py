"""Experiment configurations and runners behind the command line.

Each runner takes a validated config and returns ``(artifacts, checks)``:
file name -> text content, and check name -> bool.  Writing is left to
the caller so that runners stay side-effect free.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, identicals
from .errors import InputError
from .hilbert import build_grid, purity, von_neumann_entropy, wavefunction_from_samples
from .io import SWEEP_HEADER, csv_text, fmt, state_document
from .maxent import MaxEntProblem, solve_maxent, trace_distance
from .mepacket import (
    Moments,
    literal_normalization_trace,
    me_entropy_closed_form,
    me_packet,
    moments_of_state,
)


class ConfigError(InputError):
    pass


def _coerce(name, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    if isinstance(default, list):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list")
        return value
    return value


@dataclass
class BaseConfig:
    seed: int = 0

    @classmethod
    def from_mapping(cls, data: dict):
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        defaults = cls()
        kwargs = {k: _coerce(k, v, getattr(defaults, k)) for k, v in data.items()}
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _floats(name, values) -> list:
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must hold numbers") from None
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must be finite")
    return out


def _positive(name, values):
    vals = _floats(name, values if isinstance(values, list) else [values])
    if not all(v > 0 for v in vals):
        raise ConfigError(f"{name} must be positive")


@dataclass
class PacketFields:
    mean_q: list = field(default_factory=lambda: [0.0])
    mean_p: list = field(default_factory=lambda: [0.0])
    dq: list = field(default_factory=lambda: [1.0])
    dp: list = field(default_factory=lambda: [1.0])
    hbar: float = 1.0

    def check_packet(self):
        for name in ("mean_q", "mean_p"):
            _floats(name, getattr(self, name))
        _positive("dq", self.dq)
        _positive("dp", self.dp)
        _positive("hbar", self.hbar)
        if not len(self.mean_q) == len(self.mean_p) == len(self.dq) == len(self.dp):
            raise ConfigError("mean_q, mean_p, dq, dp need one entry per mode")

    def moments(self) -> Moments:
        return Moments(self.mean_q, self.mean_p, self.dq, self.dp, self.hbar)


@dataclass
class GridFields:
    x_min: float = -16.0
    x_max: float = 24.0
    n_points: int = 512

    def grid(self):
        return build_grid(self.x_min, self.x_max, self.n_points)


# --- mepacket-report ----------------------------------------------------------

@dataclass
class MePacketReportConfig(GridFields, PacketFields, BaseConfig):
    basis: str = "fock"
    x_min: float = -12.0
    x_max: float = 12.0
    n_points: int = 256

    def validate(self):
        BaseConfig.validate(self)
        self.check_packet()
        if self.basis not in ("fock", "grid"):
            raise ConfigError("basis must be 'fock' or 'grid'")
        if self.basis == "grid":
            if len(self.dq) != 1:
                raise ConfigError("grid basis supports a single mode")
            try:
                self.grid()
            except InputError as exc:
                raise ConfigError(str(exc)) from None


def run_mepacket_report(cfg: MePacketReportConfig):
    m = cfg.moments()
    nus = m.check()
    rows = []
    checks = {}
    for k in range(m.n_modes):
        mk = m.mode(k)
        if cfg.basis == "grid":
            rho = me_packet(mk, cfg.grid())
        else:
            rho = me_packet(mk)
        got = moments_of_state(rho, hbar=m.hbar)
        s_num = von_neumann_entropy(rho)
        s_cf = me_entropy_closed_form(nus[k])
        rows.append((k, nus[k], s_num, s_cf, purity(rho), literal_normalization_trace(nus[k]),
                     got.Q[0], got.P[0], got.dQ[0], got.dP[0]))
        checks[f"mode{k}_moments"] = bool(max(abs(a - b) for a, b in zip(got.as_row(0), mk.as_row(0))) < 1e-6)
        checks[f"mode{k}_entropy"] = bool(abs(s_num - s_cf) < 1e-6)
    header = ("mode", "nu", "entropy_numeric", "entropy_closed_form", "purity",
              "literal_prefactor_trace", "Q", "P", "dQ", "dP")
    total = sum(me_entropy_closed_form(n) for n in nus)
    artifacts = {"report.csv": csv_text(header, rows, [f"total_entropy_closed_form={fmt(total)}"])}
    rho = me_packet(m, cfg.grid() if cfg.basis == "grid" else None)
    doc = state_document(rho, hbar=m.hbar if cfg.basis == "grid" else None)
    artifacts["state.json"] = json.dumps(doc, indent=1) + "\n"
    checks["total_entropy"] = bool(abs(doc["entropy"] - total) < 1e-6)
    return artifacts, checks


# --- maxent-verify --------------------------------------------------------------

@dataclass
class MaxEntVerifyConfig(BaseConfig):
    specs: list = field(default_factory=lambda: [[0.0, 0.0, 1.0, 1.0], [1.0, -1.0, 1.5, 0.8],
                                                 [0.0, 0.0, 2.0, 2.0]])
    hbars: list = field(default_factory=lambda: [1.0, 0.5])
    tol: float = 1e-9
    max_iter: int = 200
    distance_tol: float = 1e-6

    def validate(self):
        BaseConfig.validate(self)
        if not self.specs:
            raise ConfigError("specs must not be empty")
        for s in self.specs:
            if not isinstance(s, list) or len(s) != 4:
                raise ConfigError("each spec is [Q, P, dQ, dP]")
            _floats("specs", s)
            _positive("specs spreads", s[2:])
        _positive("hbars", self.hbars)
        _positive("tol", self.tol)
        _positive("distance_tol", self.distance_tol)
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")


def run_maxent_verify(cfg: MaxEntVerifyConfig):
    rows = []
    checks = {}
    for s in cfg.specs:
        for h in cfg.hbars:
            m = Moments.single(*s, hbar=h)
            sol = solve_maxent(MaxEntProblem(m, tol=cfg.tol, max_iter=cfg.max_iter))
            ref = me_packet(m, sol.state.basis)
            dist = trace_distance(sol.state, ref)
            nu = float(m.nu[0])
            rows.append((*s, h, nu, sol.iterations, dist, float(np.max(np.abs(sol.residuals))),
                         sol.entropy, me_entropy_closed_form(nu)))
            checks[f"spec{s}_hbar{h}"] = bool(dist < cfg.distance_tol)
    header = ("Q", "P", "dQ", "dP", "hbar", "nu", "iterations", "trace_distance", "max_residual",
              "entropy", "entropy_closed_form")
    return {"maxent.csv": csv_text(header, rows)}, checks


# --- classical-limit ---------------------------------------------------------------

@dataclass
class PotentialFields:
    potential: str = "quartic"
    omega: float = 1.0
    lam4: float = 0.1
    well_a: float = 1.0
    well_b: float = 0.1
    coeffs: list = field(default_factory=list)
    mass: float = 1.0

    def potential_spec(self) -> dynamics.PotentialSpec:
        P = dynamics.PotentialSpec
        if self.potential == "free":
            return P.free(self.mass)
        if self.potential == "harmonic":
            return P.harmonic(self.omega, self.mass)
        if self.potential == "quartic":
            return P.quartic(self.lam4, self.mass)
        if self.potential == "double_well":
            return P.double_well(self.well_a, self.well_b, self.mass)
        if self.potential == "polynomial":
            return P.polynomial(_floats("coeffs", self.coeffs), self.mass)
        raise ConfigError(f"unknown potential {self.potential!r}")


@dataclass
class ClassicalLimitConfig(PotentialFields, PacketFields, BaseConfig):
    hbars: list = field(default_factory=lambda: [1.0, 0.5, 0.25])
    scales: list = field(default_factory=list)
    t_end: float = 3.0
    dt: float = 2e-3
    n_samples: int = 2 ** 20
    sampler: str = "rqmc"
    n_records: int = 31
    check_step: bool = True
    order_band: list = field(default_factory=lambda: [1.5, 2.5])

    def validate(self):
        BaseConfig.validate(self)
        self.check_packet()
        if len(self.dq) != 1:
            raise ConfigError("dynamics is single-mode")
        _positive("mass", self.mass)
        _positive("t_end", self.t_end)
        _positive("dt", self.dt)
        if self.hbars and self.scales:
            raise ConfigError("give hbars or scales, not both")
        if not (self.hbars or self.scales):
            raise ConfigError("give hbars or scales")
        if self.hbars:
            _positive("hbars", self.hbars)
        if self.scales:
            _positive("scales", self.scales)
        if self.n_samples < 2:
            raise ConfigError("n_samples must be >= 2")
        if self.sampler not in dynamics.SAMPLERS:
            raise ConfigError(f"sampler must be one of {dynamics.SAMPLERS}")
        if self.n_records < 2:
            raise ConfigError("n_records must be >= 2")
        if len(self.order_band) != 2:
            raise ConfigError("order_band is [low, high]")
        try:
            self.potential_spec()
        except InputError as exc:
            raise ConfigError(str(exc)) from None


def step_halving_change(v, m: Moments, t_grid, dt, n_samples, seed, sampler) -> float:
    """Largest change of the final moments when dt is halved, relative to the final spreads."""
    ens = dynamics.sample_ensemble(m, n_samples, seed, sampler)
    a = dynamics.evolve_classical(ens, v, t_grid[-1:], dt)
    b = dynamics.evolve_classical(ens, v, t_grid[-1:], dt / 2)
    return max(abs(a.Q[-1] - b.Q[-1]) / a.dQ[-1], abs(a.dQ[-1] - b.dQ[-1]) / a.dQ[-1],
               abs(a.P[-1] - b.P[-1]) / a.dP[-1], abs(a.dP[-1] - b.dP[-1]) / a.dP[-1])


def run_classical_limit(cfg: ClassicalLimitConfig):
    v = cfg.potential_spec()
    m = cfg.moments()
    table = dynamics.hbar_sweep(v, m, hbars=cfg.hbars or None, scales=cfg.scales or None,
                                t_end=cfg.t_end, dt=cfg.dt, n_samples=cfg.n_samples, seed=cfg.seed,
                                n_records=cfg.n_records, sampler=cfg.sampler)
    sweep = [(r.hbar, r.nu, r.dQ_disc, r.dP_disc, r.Q_disc, r.P_disc, r.aggregate, r.mc_error)
             for r in table.rows]
    artifacts = {"sweep.csv": csv_text(SWEEP_HEADER, sweep, [f"fitted_order={fmt(table.fitted_order)}"])}
    traj = []
    for r, (qrec, crec) in zip(table.rows, table.records):
        for rec in (qrec, crec):
            for i, t in enumerate(rec.times):
                traj.append((r.hbar, r.scale, rec.engine, t, rec.Q[i], rec.P[i], rec.dQ[i], rec.dP[i]))
    artifacts["trajectories.csv"] = csv_text(
        ("hbar", "scale", "engine", "t", "Q", "P", "dQ", "dP"), traj)

    checks = {}
    agg = table.column("aggregate")
    if v.is_quadratic:
        checks["within_5_stderr"] = all(
            dynamics.compare_trajectories(q, c).within_stderr(5.0) for q, c in table.records)
    else:
        checks["aggregate_decreasing"] = bool(np.all(np.diff(agg) < 0))
        lo, hi = cfg.order_band
        checks["order_in_band"] = bool(lo <= table.fitted_order <= hi)
    if cfg.check_step:
        t_grid = table.records[0][0].times
        first = table.rows[0]
        mm = Moments(m.Q, m.P, tuple(first.scale * x for x in m.dQ),
                     tuple(first.scale * x for x in m.dP), first.hbar)
        change = step_halving_change(v, mm, t_grid, cfg.dt, cfg.n_samples, cfg.seed, cfg.sampler)
        checks["step_halving"] = bool(change < 1e-4)
    return artifacts, checks


# --- identical particles ---------------------------------------------------------------

OBSERVABLES = {
    "position": lambda g: identicals.position_kernel(g, 1),
    "position2": lambda g: identicals.position_kernel(g, 2),
    "identity": identicals.identity_kernel,
}


def _gaussian(grid, center, spread):
    return wavefunction_from_samples(grid, np.exp(-((grid.x - center) ** 2) / (4 * spread * spread)))


def _region(intervals) -> identicals.Region:
    try:
        return identicals.Region(tuple(tuple(iv) for iv in intervals))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad region: {exc}") from None


@dataclass
class IdenticalFields(GridFields):
    psi_center: float = 0.0
    psi_spread: float = 0.5
    region: list = field(default_factory=lambda: [[-4.0, 4.0]])
    observables: list = field(default_factory=lambda: ["position", "position2", "identity"])

    def check_identicals(self):
        _positive("psi_spread", self.psi_spread)
        _region(self.region)
        for name in self.observables:
            if name not in OBSERVABLES:
                raise ConfigError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}")
        try:
            self.grid()
        except InputError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class DisturbanceConfig(IdenticalFields, BaseConfig):
    phi_center: float = 8.0
    phi_spread: float = 0.5
    signs: list = field(default_factory=lambda: [1, -1])

    def validate(self):
        BaseConfig.validate(self)
        self.check_identicals()
        _positive("phi_spread", self.phi_spread)
        if not self.signs or any(s not in (1, -1) for s in self.signs):
            raise ConfigError("signs must be +1 or -1")


def run_disturbance(cfg: DisturbanceConfig):
    g = cfg.grid()
    D = _region(cfg.region)
    psi = _gaussian(g, cfg.psi_center, cfg.psi_spread)
    phi = _gaussian(g, cfg.phi_center, cfg.phi_spread)
    rows = []
    for name in cfg.observables:
        full = OBSERVABLES[name](g)
        for local, A in ((False, full), (True, identicals.restrict_to_region(full, D))):
            for sign in cfg.signs:
                pair = identicals.symmetrize(psi, phi, sign)
                sym = identicals.symmetrized_observable_average(pair, A)
                single = identicals.single_average(psi, A)
                two_term = single + identicals.single_average(phi, A)
                rows.append((name, local, sign, single, sym, abs(sym - single), two_term))
    header = ("observable", "d_local", "sign", "single", "symmetrized", "disturbance", "two_term_sum")
    checks = {"phi_outside_D": identicals.mass_in_region(phi, D) < 1e-14}
    return {"disturbance.csv": csv_text(header, rows)}, checks


@dataclass
class DLocalCheckConfig(IdenticalFields, BaseConfig):
    tol: float = 1e-12

    def validate(self):
        BaseConfig.validate(self)
        self.check_identicals()
        _positive("tol", self.tol)


def run_dlocal_check(cfg: DLocalCheckConfig):
    g = cfg.grid()
    D = _region(cfg.region)
    rows = []
    checks = {}
    for name in cfg.observables:
        full = OBSERVABLES[name](g)
        restricted = identicals.restrict_to_region(full, D)
        rows.append((name, False, identicals.is_d_local(full, D, cfg.tol)))
        ok = identicals.is_d_local(restricted, D, cfg.tol)
        rows.append((name, True, ok))
        checks[f"{name}_restricted_local"] = ok
    return {"dlocal.csv": csv_text(("observable", "restricted", "d_local"), rows)}, checks


@dataclass
class SeparationStatusConfig(IdenticalFields, BaseConfig):
    others: list = field(default_factory=lambda: [[8.0, 0.5]])
    epsilon: float = 1e-6
    epsilon_prime: float = 1e-6

    def validate(self):
        BaseConfig.validate(self)
        self.check_identicals()
        _positive("epsilon", self.epsilon)
        _positive("epsilon_prime", self.epsilon_prime)
        for o in self.others:
            if not isinstance(o, list) or len(o) != 2:
                raise ConfigError("each other particle is [center, spread]")
            _floats("others", o)
            _positive("others spread", o[1])


def run_separation_status(cfg: SeparationStatusConfig):
    g = cfg.grid()
    D = _region(cfg.region)
    psi = _gaussian(g, cfg.psi_center, cfg.psi_spread)
    others = [_gaussian(g, c, s) for c, s in cfg.others]
    probes = [identicals.restrict_to_region(OBSERVABLES[n](g), D) for n in cfg.observables]
    report = identicals.separation_status_check(
        psi, others, D, identicals.SeparationCriteria(cfg.epsilon, cfg.epsilon_prime, probes))
    rows = [(c.name, c.value, c.threshold, c.passed) for c in report.checks]
    artifacts = {"separation.csv": csv_text(("check", "value", "threshold", "passed"), rows)}
    return artifacts, {"separation_status": report.passed}


EXPERIMENTS = {
    "mepacket-report": (MePacketReportConfig, run_mepacket_report),
    "maxent-verify": (MaxEntVerifyConfig, run_maxent_verify),
    "classical-limit": (ClassicalLimitConfig, run_classical_limit),
    "disturbance": (DisturbanceConfig, run_disturbance),
    "dlocal-check": (DLocalCheckConfig, run_dlocal_check),
    "separation-status": (SeparationStatusConfig, run_separation_status),
}
