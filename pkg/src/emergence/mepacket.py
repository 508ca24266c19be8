"""Maximum-entropy packets.

For each mode the packet is

    T = exp(-(1/hbar) * ln((nu+1)/(nu-1)) * K) / Z,
    K = (dP/dQ)(q-Q)^2/2 + (dQ/dP)(p-P)^2/2,
    nu = 2 dQ dP / hbar,

and several modes are combined as a tensor product.  ``K`` is a
unit-frequency oscillator with spectrum hbar*(n + 1/2), so in its own
number basis the state is geometric with ratio (nu-1)/(nu+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .errors import (
    DomainViolation,
    InputError,
    MinimalUncertaintyBoundary,
    NotMinimal,
    TruncationInsufficient,
    UncertaintyViolation,
)
from .hilbert import (
    FockBasis,
    GridBasis,
    Operator,
    ProductBasis,
    StateOperator,
    WaveFunction,
    expectation,
    hermitian_eig,
    hermitize,
    quadratures,
    tensor,
    wavefunction_from_samples,
)

TAIL_TOL = 1e-12
MOMENT_TOL = 1e-6


def _as_tuple(v) -> tuple:
    return tuple(float(x) for x in np.atleast_1d(np.asarray(v, dtype=float)))


@dataclass(frozen=True)
class Moments:
    """Per-mode means and spreads of position and momentum.

    Construction does not enforce nu > 1 so that states on or below the
    uncertainty boundary can still be described; ``check()`` does.
    """

    Q: tuple
    P: tuple
    dQ: tuple
    dP: tuple
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("Q", "P", "dQ", "dP"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))
        n = len(self.Q)
        if not (len(self.P) == len(self.dQ) == len(self.dP) == n):
            raise InputError("all moment arrays need one entry per mode")
        if not all(np.isfinite(self.Q + self.P + self.dQ + self.dP)):
            raise InputError("moments must be finite")
        if min(self.dQ + self.dP) <= 0:
            raise InputError("spreads must be positive")
        if not self.hbar > 0:
            raise InputError("hbar must be positive")

    @classmethod
    def single(cls, Q, P, dQ, dP, hbar=1.0) -> "Moments":
        return cls((Q,), (P,), (dQ,), (dP,), hbar)

    @property
    def n_modes(self) -> int:
        return len(self.Q)

    @property
    def nu(self) -> np.ndarray:
        return 2 * np.asarray(self.dQ) * np.asarray(self.dP) / self.hbar

    def mode(self, k: int) -> "Moments":
        return Moments.single(self.Q[k], self.P[k], self.dQ[k], self.dP[k], self.hbar)

    def check(self) -> np.ndarray:
        """Return nu per mode, raising if any mode is not strictly mixed."""
        return np.array([nu_from_moments(dq, dp, self.hbar) for dq, dp in zip(self.dQ, self.dP)])

    def as_row(self, k: int = 0) -> tuple:
        return (self.Q[k], self.P[k], self.dQ[k], self.dP[k])


def nu_from_moments(dQ: float, dP: float, hbar: float) -> float:
    if not (dQ > 0 and dP > 0 and hbar > 0):
        raise InputError("dQ, dP and hbar must be positive")
    nu = 2 * dP * dQ / hbar
    if abs(nu - 1) <= 1e-12:
        raise MinimalUncertaintyBoundary(f"nu = {nu!r}: use gaussian_packet")
    if nu < 1:
        raise UncertaintyViolation(f"nu = {nu!r} < 1 violates the uncertainty relation")
    return nu


def geometric_ratio(nu: float) -> float:
    return (nu - 1) / (nu + 1)


def required_dim(nu: float, tail: float = TAIL_TOL) -> int:
    """Smallest truncation with ratio**dim < tail."""
    lam = geometric_ratio(nu)
    if lam <= 0:
        return 2
    return max(2, int(math.floor(math.log(tail) / math.log(lam))) + 1)


def natural_fock_basis(m: Moments, k: int = 0, dim: int | None = None) -> FockBasis:
    """Number basis of the packet's own K operator."""
    if dim is None:
        dim = required_dim(nu_from_moments(m.dQ[k], m.dP[k], m.hbar))
    return FockBasis(dim, m.Q[k], m.P[k], m.dP[k] / m.dQ[k], m.hbar)


def _hbar_of(basis, m: Moments):
    if isinstance(basis, FockBasis) and not math.isclose(basis.hbar, m.hbar, rel_tol=1e-14):
        raise InputError(f"basis hbar {basis.hbar} disagrees with moments hbar {m.hbar}")
    return m.hbar


def k_operator(m: Moments, k: int, basis) -> Operator:
    hbar = _hbar_of(basis, m)
    ops = quadratures(basis, hbar)
    Q, P, dQ, dP = m.as_row(k)
    eye = np.eye(basis.dim)
    dq2 = ops.q2.matrix - 2 * Q * ops.q.matrix + Q * Q * eye
    dp2 = ops.p2.matrix - 2 * P * ops.p.matrix + P * P * eye
    return Operator(basis, hermitize(0.5 * (dP / dQ) * dq2 + 0.5 * (dQ / dP) * dp2), True)


def _single_mode_packet(m: Moments, basis) -> StateOperator:
    nu = nu_from_moments(m.dQ[0], m.dP[0], m.hbar)
    need = required_dim(nu)
    if basis is None:
        basis = natural_fock_basis(m, 0, need)
    if basis.dim < need:
        raise TruncationInsufficient(
            f"nu={nu:.4g} needs dim >= {need} for tail < {TAIL_TOL:g}, basis has {basis.dim}")
    Q, P, dQ, dP = m.as_row(0)
    boost = isinstance(basis, GridBasis) and P != 0.0
    # on a grid, build the P = 0 packet (real K) and boost it by exp(iPx/hbar)
    K = k_operator(Moments.single(Q, 0.0, dQ, dP, m.hbar) if boost else m, 0, basis)
    eps, vecs = hermitian_eig(K)
    beta = math.log((nu + 1) / (nu - 1))
    # shift by the ground level: only the normalized state matters
    weights = np.exp(-beta * (eps - eps[0]) / m.hbar)
    weights /= weights.sum()
    mat = (vecs * weights) @ vecs.conj().T
    if boost:
        phase = np.exp(1j * P * basis.x / m.hbar)
        mat = phase[:, None] * mat * phase.conj()[None, :]
    rho = StateOperator(basis, hermitize(mat))
    _verify_packet(rho, m)
    return rho


def _verify_packet(rho: StateOperator, m: Moments):
    got = moments_of_state(rho, hbar=m.hbar)
    target = m.as_row(0)
    dev = [abs(got.Q[0] - target[0]), abs(got.P[0] - target[1]),
           abs(got.dQ[0] ** 2 - target[2] ** 2), abs(got.dP[0] ** 2 - target[3] ** 2)]
    if max(dev) > MOMENT_TOL:
        raise TruncationInsufficient(
            f"basis cannot hold the packet: moment deviations {np.array(dev)}")
    cov = covariance(rho, m.hbar)
    if abs(cov) > MOMENT_TOL * max(1.0, m.dQ[0] * m.dP[0]):
        raise TruncationInsufficient(f"spurious q-p covariance {cov:.3e}")


def me_packet(m: Moments, basis=None) -> StateOperator:
    """ME packet for ``m``.

    ``basis`` may be ``None`` (each mode in its own number basis, truncated
    by the tail rule), a single-mode basis, or a sequence / ``ProductBasis``
    of single-mode bases for several modes.
    """
    if m.n_modes == 1:
        if isinstance(basis, ProductBasis):
            basis = basis.factors[0]
        elif isinstance(basis, (list, tuple)):
            basis = basis[0]
        return _single_mode_packet(m, basis)
    if basis is None:
        factors = [None] * m.n_modes
    elif isinstance(basis, ProductBasis):
        factors = list(basis.factors)
    elif isinstance(basis, Sequence):
        factors = list(basis)
    else:
        raise InputError("multi-mode packets need one basis per mode")
    if len(factors) != m.n_modes:
        raise InputError(f"{m.n_modes} modes but {len(factors)} bases")
    return tensor(*(_single_mode_packet(m.mode(k), b) for k, b in enumerate(factors)))


def me_entropy_closed_form(nu: float) -> float:
    """Entropy in nats; equals the Bose-Einstein entropy of occupation (nu-1)/2."""
    nu = float(nu)
    if not nu > 1:
        raise DomainViolation(f"closed-form entropy needs nu > 1, got {nu!r}")
    a, b = 0.5 * (nu + 1), 0.5 * (nu - 1)
    return float(xlogy(a, a) - xlogy(b, b))


def literal_normalization_trace(nu: float, dim: int | None = None) -> float:
    """Trace of the packet exponential times the bare prefactor 2/(nu^2-1).

    Summed over the oscillator spectrum hbar*(n+1/2).  The closed form of
    the sum is 1/sqrt(nu^2-1), so the bare prefactor does not give a unit
    trace; ``me_packet`` normalizes by the computed trace instead.
    """
    nu_from_moments(1.0, nu / 2, 1.0)
    lam = geometric_ratio(nu)
    dim = dim or required_dim(nu, 1e-17)
    n = np.arange(dim)
    return float(2 / (nu * nu - 1) * np.sum(lam ** (n + 0.5)))


def gaussian_packet(m: Moments, basis: GridBasis) -> WaveFunction:
    Q, P, dQ, dP = m.as_row(0)
    if abs(2 * dQ * dP / m.hbar - 1) >= 1e-9:
        raise NotMinimal(f"dQ*dP = {dQ * dP!r} is not hbar/2")
    x = basis.x
    psi = np.exp(-((x - Q) ** 2) / (4 * dQ * dQ) + 1j * P * x / m.hbar)
    return wavefunction_from_samples(basis, psi)


def covariance(rho: StateOperator, hbar: float | None = None) -> float:
    """Symmetrized q-p covariance tr(rho {q-Q, p-P})/2."""
    ops = quadratures(rho.basis, hbar)
    Q = expectation(rho, ops.q)
    P = expectation(rho, ops.p)
    sym = Operator(rho.basis, hermitize(ops.q.matrix @ ops.p.matrix), True)
    return expectation(rho, sym) - Q * P


def moments_of_state(rho: StateOperator, basis=None, hbar: float | None = None) -> Moments:
    if basis is not None and basis != rho.basis:
        raise InputError("basis does not match the state")
    b = rho.basis
    if isinstance(b, FockBasis):
        hbar = b.hbar
    ops = quadratures(b, hbar)
    Q = expectation(rho, ops.q)
    P = expectation(rho, ops.p)
    varq = expectation(rho, ops.q2) - Q * Q
    varp = expectation(rho, ops.p2) - P * P
    return Moments.single(Q, P, math.sqrt(max(varq, 0.0)), math.sqrt(max(varp, 0.0)), ops.hbar)
