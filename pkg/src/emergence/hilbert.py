"""Truncated Hilbert spaces and dense operator algebra.

Two single-degree-of-freedom representations are supported:

* ``GridBasis`` -- a uniform position grid.  Vectors are stored in the
  orthonormal discrete coordinates ``v_i = sqrt(w) * psi(x_i)`` so that
  matrix traces and inner products need no quadrature weights.  Momentum
  is the spectral (FFT) derivative, which makes the grid periodic with
  period ``n_points * spacing``.
* ``FockBasis`` -- number states of a unit-frequency oscillator displaced
  to ``(center_Q, center_P)`` with ``mass_scale = dP/dQ``.

Several modes combine through ``ProductBasis`` (Kronecker order).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import (
    BasisMismatch,
    BoundaryLeak,
    DegenerateInterval,
    DomainViolation,
    InputError,
    NonPowerOfTwo,
    NotHermitian,
)

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_DROP = 1e-14
LEAK_TOL = 1e-8


@dataclass(frozen=True)
class GridBasis:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise DegenerateInterval(f"x_max={self.x_max} must exceed x_min={self.x_min}")
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise NonPowerOfTwo(f"n_points={n} must be a power of two >= 8")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def weight(self) -> float:
        return self.spacing

    @property
    def dim(self) -> int:
        return self.n_points

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)


@dataclass(frozen=True)
class FockBasis:
    dim: int
    center_Q: float = 0.0
    center_P: float = 0.0
    mass_scale: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.dim < 2:
            raise InputError(f"dim={self.dim} must be >= 2")
        if not self.mass_scale > 0:
            raise InputError("mass_scale must be positive")
        if not self.hbar > 0:
            raise InputError("hbar must be positive")

    @property
    def length_scale(self) -> float:
        """sqrt(hbar / (2 * mass_scale)): the ground-state position spread."""
        return float(np.sqrt(self.hbar / (2 * self.mass_scale)))

    @property
    def momentum_scale(self) -> float:
        return float(np.sqrt(self.hbar * self.mass_scale / 2))


@dataclass(frozen=True)
class ProductBasis:
    factors: tuple

    @property
    def dim(self) -> int:
        return int(np.prod([f.dim for f in self.factors]))


Basis = Union[GridBasis, FockBasis, ProductBasis]


def build_grid(x_min: float, x_max: float, n_points: int) -> GridBasis:
    return GridBasis(float(x_min), float(x_max), int(n_points))


def _hermitian_defect(m: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return float(np.max(np.abs(m - m.conj().T))) / scale if m.size else 0.0


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class Operator:
    basis: Basis
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.basis.dim:
            raise BasisMismatch(f"matrix dim {m.shape[0]} != basis dim {self.basis.dim}")
        if self.hermitian and _hermitian_defect(m) >= HERMITIAN_TOL:
            raise NotHermitian(f"hermitian defect {_hermitian_defect(m):.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _check(self, other: "Operator"):
        if other.basis != self.basis:
            raise BasisMismatch("operators live in different bases")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.basis, self.matrix + other.matrix, self.hermitian and other.hermitian)
        return Operator(self.basis, self.matrix + other * np.eye(self.dim),
                        self.hermitian and np.isreal(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, scalar):
        return Operator(self.basis, scalar * self.matrix, self.hermitian and np.isreal(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.basis, self.matrix @ other.matrix)

    def dag(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T, self.hermitian)

    def hermitized(self) -> "Operator":
        return Operator(self.basis, hermitize(self.matrix), True)


@dataclass(frozen=True, eq=False)
class StateOperator:
    basis: Basis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != self.basis.dim:
            raise BasisMismatch(f"state matrix shape {m.shape} does not fit basis dim {self.basis.dim}")
        if _hermitian_defect(m) >= HERMITIAN_TOL:
            raise NotHermitian("state operator is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) >= TRACE_TOL:
            raise InputError(f"trace {tr!r} differs from 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -POSITIVITY_TOL:
            raise InputError(f"negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues, clipped at zero."""
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Amplitudes are continuum values psi(x_i) on a grid, plain coefficients in Fock space."""

    basis: Basis
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.basis.dim,):
            raise BasisMismatch(f"amplitude shape {a.shape} does not fit basis dim {self.basis.dim}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        if self.normalized and abs(self.norm() - 1) >= 1e-10:
            raise InputError(f"wavefunction flagged normalized has norm {self.norm()!r}")
        if isinstance(self.basis, GridBasis):
            edge = max(abs(a[0]), abs(a[-1]))
            if edge >= LEAK_TOL:
                warnings.warn(f"|psi| = {edge:.2e} at the grid boundary", BoundaryLeak, stacklevel=3)

    def coordinates(self) -> np.ndarray:
        """Components in the orthonormal discrete basis."""
        if isinstance(self.basis, GridBasis):
            return np.sqrt(self.basis.weight) * self.amplitudes
        return self.amplitudes

    def norm(self) -> float:
        return float(np.linalg.norm(self.coordinates()))

    def inner(self, other: "WaveFunction") -> complex:
        if other.basis != self.basis:
            raise BasisMismatch("wavefunctions live in different bases")
        return complex(np.vdot(self.coordinates(), other.coordinates()))


def wavefunction_from_samples(basis: GridBasis, values, normalize: bool = True) -> WaveFunction:
    values = np.asarray(values, dtype=complex)
    if normalize:
        values = values / np.sqrt(basis.weight * np.sum(np.abs(values) ** 2))
    return WaveFunction(basis, values, normalized=normalize)


def projector(psi: WaveFunction) -> StateOperator:
    v = psi.coordinates() / psi.norm()
    return StateOperator(psi.basis, hermitize(np.outer(v, v.conj())))


def identity(basis: Basis) -> Operator:
    return Operator(basis, np.eye(basis.dim), True)


# --- canonical operators -----------------------------------------------------

def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


def _fock_quadratures(b: FockBasis, extra: int = 0):
    """q and p matrices in a Fock basis enlarged by ``extra`` states."""
    a = _ladder(b.dim + extra)
    q = b.center_Q * np.eye(b.dim + extra) + b.length_scale * (a + a.T)
    p = b.center_P * np.eye(b.dim + extra) + 1j * b.momentum_scale * (a.T - a)
    return q, p


def position_operator(b: Basis) -> Operator:
    if isinstance(b, GridBasis):
        return Operator(b, np.diag(b.x), True)
    if isinstance(b, FockBasis):
        q, _ = _fock_quadratures(b)
        return Operator(b, q, True)
    raise InputError("position_operator needs a single-mode basis")


def _spectral_derivative(b: GridBasis) -> np.ndarray:
    k = b.k
    # the Nyquist mode has no odd derivative
    k[b.n_points // 2] = 0.0
    return _spectral_multiplier(b, 1j * k).real


def _spectral_multiplier(b: GridBasis, symbol: np.ndarray) -> np.ndarray:
    return np.fft.ifft(symbol[:, None] * np.fft.fft(np.eye(b.n_points), axis=0), axis=0)


def kinetic_square(b: GridBasis, hbar: float) -> np.ndarray:
    """Spectral -hbar^2 d^2/dx^2, Nyquist mode included.

    Squaring the first-derivative matrix instead would leave the Nyquist
    mode with zero kinetic energy and a spurious low-lying eigenstate.
    """
    # even real symbol: the matrix is real up to rounding
    return hermitize(_spectral_multiplier(b, (hbar * b.k) ** 2).real)


def momentum_operator(b: Basis, hbar: float | None = None) -> Operator:
    if isinstance(b, GridBasis):
        if hbar is None:
            raise InputError("grid momentum needs hbar")
        return Operator(b, hermitize(-1j * hbar * _spectral_derivative(b)), True)
    if isinstance(b, FockBasis):
        if hbar is not None and not np.isclose(hbar, b.hbar, rtol=1e-14, atol=0):
            raise InputError(f"hbar={hbar} disagrees with basis hbar={b.hbar}")
        _, p = _fock_quadratures(b)
        return Operator(b, hermitize(p), True)
    raise InputError("momentum_operator needs a single-mode basis")


@dataclass(frozen=True, eq=False)
class Quadratures:
    """q, p and their exact squares in a basis.

    In a truncated Fock space ``q @ q`` is wrong in its last diagonal entry,
    so the squares are built one level higher and cut back.
    """

    q: Operator
    p: Operator
    q2: Operator
    p2: Operator
    hbar: float


def quadratures(b: Basis, hbar: float | None = None) -> Quadratures:
    if isinstance(b, GridBasis):
        if hbar is None:
            raise InputError("grid quadratures need hbar")
        q = position_operator(b)
        p = momentum_operator(b, hbar)
        q2 = Operator(b, np.diag(b.x ** 2), True)
        p2 = Operator(b, kinetic_square(b, hbar), True)
        return Quadratures(q, p, q2, p2, float(hbar))
    if isinstance(b, FockBasis):
        qb, pb = _fock_quadratures(b, extra=1)
        d = b.dim
        q2 = Operator(b, hermitize((qb @ qb)[:d, :d]), True)
        p2 = Operator(b, hermitize((pb @ pb)[:d, :d]), True)
        return Quadratures(position_operator(b), momentum_operator(b), q2, p2, b.hbar)
    raise InputError("quadratures need a single-mode basis")


# --- spectral calculus -------------------------------------------------------

def hermitian_eig(A: Operator):
    if not A.hermitian:
        raise NotHermitian("hermitian_eig requires the hermitian flag")
    m = A.matrix
    # real symmetric input: the real solver is several times faster
    if np.iscomplexobj(m) and not np.any(m.imag):
        return np.linalg.eigh(np.ascontiguousarray(m.real))
    return np.linalg.eigh(m)


_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}


def spectral_apply(w: np.ndarray, v: np.ndarray, fw: np.ndarray) -> np.ndarray:
    return hermitize((v * fw) @ v.conj().T)


def op_func(A: Operator, f: str) -> Operator:
    if f not in _FUNCS:
        raise InputError(f"unknown function {f!r}; choose from {sorted(_FUNCS)}")
    w, v = hermitian_eig(A)
    if f == "log" and w[0] <= 0:
        raise DomainViolation(f"log of operator with eigenvalue {w[0]:.3e}")
    if f == "sqrt":
        if w[0] < -EIG_DROP:
            raise DomainViolation(f"sqrt of operator with eigenvalue {w[0]:.3e}")
        w = np.clip(w, 0.0, None)
    return Operator(A.basis, spectral_apply(w, v, _FUNCS[f](w)), True)


def expectation(rho: StateOperator, A: Operator) -> float:
    if rho.basis != A.basis:
        raise BasisMismatch("state and observable live in different bases")
    val = np.sum(rho.matrix.T * A.matrix)
    if abs(val.imag) >= 1e-10 * max(1.0, abs(val.real)):
        raise NotHermitian(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def entropy_from_eigenvalues(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > EIG_DROP]
    return float(-np.sum(lam * np.log(lam)))


def von_neumann_entropy(rho: StateOperator) -> float:
    """Entropy in nats."""
    return entropy_from_eigenvalues(rho.eigenvalues())


def purity(rho: StateOperator) -> float:
    return float(np.sum(np.abs(rho.matrix) ** 2))


def tensor(*states: StateOperator) -> StateOperator:
    m = states[0].matrix
    for s in states[1:]:
        m = np.kron(m, s.matrix)
    return StateOperator(ProductBasis(tuple(s.basis for s in states)), hermitize(m))
