"""Two identical particles, kernel observables and D-locality.

A one-particle observable is a kernel ``a(x; x')`` sampled on a grid and
acting by quadrature, ``(A f)(x_i) = sum_j w a(x_i; x_j) f(x_j)``.
Multiplication by ``g(x)`` has kernel ``g(x_i) delta_ij / w`` so that the
continuum delta becomes the grid identity.

The registration observable on a symmetrized pair is ``A x 1 + 1 x A``.  Its
average is evaluated from single-particle contractions; the two-particle
vector is only materialized by ``brute_force_pair_average``, which exists
to check the contraction formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisMismatch, GridTooLarge, InputError, NotHermitian, PauliExclusion, ProbeNotLocal
from .hilbert import GridBasis, Operator, WaveFunction, hermitize

BRUTE_FORCE_MAX = 32


@dataclass(frozen=True, eq=False)
class KernelOperator:
    basis: GridBasis
    kernel: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.kernel, dtype=complex)
        n = self.basis.n_points
        if a.shape != (n, n):
            raise BasisMismatch(f"kernel shape {a.shape} does not fit a {n}-point grid")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.conj().T)) >= 1e-12 * scale:
            raise NotHermitian("kernel is not Hermitian")
        a.setflags(write=False)
        object.__setattr__(self, "kernel", a)

    @property
    def weight(self) -> float:
        return self.basis.weight

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.weight * (self.kernel @ np.asarray(f))

    def as_operator(self) -> Operator:
        """Matrix in the orthonormal grid coordinates (kernel times weight)."""
        return Operator(self.basis, hermitize(self.weight * self.kernel), True)

    def scaled(self, c: float) -> "KernelOperator":
        return KernelOperator(self.basis, c * self.kernel)

    def norm(self) -> float:
        """Operator norm on L2."""
        return float(np.max(np.abs(np.linalg.eigvalsh(self.as_operator().matrix))))


def multiplication_kernel(basis: GridBasis, g) -> KernelOperator:
    g = np.asarray(g(basis.x) if callable(g) else g, dtype=complex)
    return KernelOperator(basis, np.diag(g) / basis.weight)


def identity_kernel(basis: GridBasis) -> KernelOperator:
    return multiplication_kernel(basis, np.ones(basis.n_points))


def position_kernel(basis: GridBasis, power: int = 1) -> KernelOperator:
    return multiplication_kernel(basis, basis.x ** power)


def kernel_from_operator(op: Operator) -> KernelOperator:
    return KernelOperator(op.basis, op.matrix / op.basis.weight)


@dataclass(frozen=True)
class Region:
    """Finite union of disjoint open intervals."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple((float(l), float(r)) for l, r in self.intervals)
        for l, r in iv:
            if not l < r:
                raise InputError(f"interval ({l}, {r}) is empty")
        for (_, r0), (l1, _) in zip(iv, iv[1:]):
            if r0 > l1:
                raise InputError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def interval(cls, l: float, r: float) -> "Region":
        return cls(((l, r),))

    def contains(self, x) -> np.ndarray:
        """Strict membership; interval endpoints are outside."""
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for l, r in self.intervals:
            inside |= (x > l) & (x < r)
        return inside


def _check_basis(psi: WaveFunction, A: KernelOperator):
    if psi.basis != A.basis:
        raise BasisMismatch("wavefunction and kernel live on different grids")


def matrix_element(f: WaveFunction, A: KernelOperator, g: WaveFunction) -> complex:
    """<f|A|g> by double quadrature."""
    _check_basis(f, A)
    _check_basis(g, A)
    w = A.weight
    return complex(w * w * np.vdot(f.amplitudes, A.kernel @ g.amplitudes))


def single_average(psi: WaveFunction, A: KernelOperator) -> float:
    val = matrix_element(psi, A, psi)
    if abs(val.imag) >= 1e-10 * max(1.0, abs(val.real)):
        raise NotHermitian(f"average has imaginary part {val.imag:.3e}")
    return val.real


@dataclass(frozen=True, eq=False)
class SymmetrizedPair:
    """N (psi(x1) phi(x2) + sign phi(x1) psi(x2)), kept in factored form."""

    psi: WaveFunction
    phi: WaveFunction
    sign: int
    overlap: complex
    norm_factor: float


def symmetrize(psi: WaveFunction, phi: WaveFunction, sign: int) -> SymmetrizedPair:
    if sign not in (1, -1):
        raise InputError("sign must be +1 (bosons) or -1 (fermions)")
    if psi.basis != phi.basis:
        raise BasisMismatch("both particles must live on the same grid")
    if not (psi.normalized and phi.normalized):
        raise InputError("both wavefunctions must be normalized")
    s = psi.inner(phi)
    if sign == -1 and abs(s) > 1 - 1e-10:
        raise PauliExclusion("two fermions cannot share one state")
    n = 1.0 / np.sqrt(2.0 * (1.0 + sign * abs(s) ** 2))
    return SymmetrizedPair(psi, phi, sign, s, float(n))


def symmetrized_observable_average(pair: SymmetrizedPair, A: KernelOperator) -> float:
    """<A x 1 + 1 x A> in the pair state.

    Equals 2 N^2 (<psi|A|psi> + <phi|A|phi> + 2 sign Re(<psi|A|phi> conj(s))),
    which is the plain sum of one-particle averages when s = 0.
    """
    a_pp = single_average(pair.psi, A)
    a_ff = single_average(pair.phi, A)
    a_pf = matrix_element(pair.psi, A, pair.phi)
    exchange = 2 * pair.sign * (a_pf * np.conj(pair.overlap)).real
    return float(2 * pair.norm_factor ** 2 * (a_pp + a_ff + exchange))


def brute_force_pair_average(psi: WaveFunction, phi: WaveFunction, sign: int, A: KernelOperator) -> float:
    """Materialize the n^2 pair vector and the n^2 x n^2 kernel of A x 1 + 1 x A."""
    b = A.basis
    n = b.n_points
    if n > BRUTE_FORCE_MAX:
        raise GridTooLarge(f"brute force is limited to {BRUTE_FORCE_MAX} points, got {n}")
    _check_basis(psi, A)
    _check_basis(phi, A)
    w = b.weight
    f, g = psi.amplitudes, phi.amplitudes
    pair = (np.outer(f, g) + sign * np.outer(g, f)).ravel()
    norm2 = w * w * np.vdot(pair, pair).real
    if norm2 <= 1e-20:
        raise PauliExclusion("antisymmetrized pair vanishes")
    pair = pair / np.sqrt(norm2)
    delta = np.eye(n) / w
    big = np.kron(A.kernel, delta) + np.kron(delta, A.kernel)
    # action carries w^2, the inner product another w^2
    return float((w ** 4 * np.vdot(pair, big @ pair)).real)


def restrict_to_region(A: KernelOperator, D: Region) -> KernelOperator:
    """P_D A P_D with P_D the indicator of D on the grid."""
    mask = D.contains(A.basis.x).astype(float)
    return KernelOperator(A.basis, A.kernel * np.outer(mask, mask))


def is_d_local(A: KernelOperator, D: Region, tol: float = 1e-12) -> bool:
    """Both A and its adjoint annihilate every grid function supported outside D."""
    outside = ~D.contains(A.basis.x)
    if not outside.any():
        return True
    m = A.as_operator().matrix
    cols = np.linalg.norm(m[:, outside], axis=0)
    rows = np.linalg.norm(m.conj().T[:, outside], axis=0)
    return bool(np.all(cols < tol) and np.all(rows < tol))


def disturbance(psi: WaveFunction, phi: WaveFunction, sign: int, A: KernelOperator) -> float:
    pair = symmetrize(psi, phi, sign)
    return abs(symmetrized_observable_average(pair, A) - single_average(psi, A))


def mass_in_region(psi: WaveFunction, D: Region) -> float:
    """Quadrature estimate of the probability inside D."""
    b = psi.basis
    inside = D.contains(b.x)
    return float(b.weight * np.sum(np.abs(psi.amplitudes[inside]) ** 2))


@dataclass(frozen=True)
class SeparationCriteria:
    epsilon: float
    epsilon_prime: float
    probes: tuple = ()

    def __post_init__(self):
        if not (self.epsilon > 0 and self.epsilon_prime > 0):
            raise InputError("thresholds must be positive")
        object.__setattr__(self, "probes", tuple(self.probes))


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class SeparationReport:
    passed: bool
    checks: tuple

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]


def separation_status_check(psi: WaveFunction, others, D: Region, c: SeparationCriteria) -> SeparationReport:
    """Sampled test that ``psi`` has separation status D among ``others``.

    (i) psi has weight in D; (ii) each other particle has less than
    ``epsilon`` of its probability in D; (iii) every probe, normalized to
    unit operator norm, is disturbed by less than ``epsilon_prime`` by each
    other particle under either exchange sign.
    """
    for k, A in enumerate(c.probes):
        if not is_d_local(A, D):
            raise ProbeNotLocal(f"probe {k} is not D-local")
    checks = []
    inside = mass_in_region(psi, D)
    checks.append(Check("psi_in_D", inside, 0.0, inside > 0.0))
    for j, phi in enumerate(others):
        m = mass_in_region(phi, D)
        checks.append(Check(f"other[{j}]_in_D", m, c.epsilon, m < c.epsilon))
    for k, A in enumerate(c.probes):
        nrm = A.norm()
        probe = A.scaled(1.0 / nrm) if nrm > 0 else A
        for j, phi in enumerate(others):
            worst = 0.0
            for sign in (1, -1):
                try:
                    worst = max(worst, disturbance(psi, phi, sign, probe))
                except PauliExclusion:
                    continue
            checks.append(Check(f"probe[{k}]_other[{j}]_disturbance", worst, c.epsilon_prime,
                                worst < c.epsilon_prime))
    return SeparationReport(all(ch.passed for ch in checks), tuple(checks))
