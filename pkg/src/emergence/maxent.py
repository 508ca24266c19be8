"""Maximum-entropy states by direct optimization.

Solves

    max S(rho)  subject to  tr rho = 1, <q> = Q, <p> = P,
                            <q^2> = Q^2 + dQ^2, <p^2> = P^2 + dP^2

through its convex dual.  With ``G = l_q q + l_p p + l_qq q^2 + l_pp p^2``
the optimum is ``exp(-G)/Z`` and the multipliers minimize

    Gamma(l) = ln tr exp(-G) + l . c,

where ``c`` is the vector of target moments.  Nothing about the shape of
the answer is assumed: the linear multipliers are free, and no closed form
is used anywhere, so the result can be checked against ``me_packet``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import BasisMismatch, Infeasible, InputError, NoConvergence
from .hilbert import (
    FockBasis,
    StateOperator,
    entropy_from_eigenvalues,
    hermitize,
    quadratures,
)
from .mepacket import Moments, natural_fock_basis, required_dim

FD_STEP = 1e-5


@dataclass(frozen=True)
class MaxEntProblem:
    target: Moments
    dim: int | None = None
    tol: float = 1e-9
    max_iter: int = 200
    basis: FockBasis | None = None
    init_scale: float = 1.0

    def __post_init__(self):
        if self.target.n_modes != 1:
            raise InputError("maxent solves one mode at a time")
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be positive")

    def resolved_basis(self) -> FockBasis:
        if self.basis is not None:
            return self.basis
        nu = float(self.target.nu[0])
        dim = self.dim or required_dim(nu)
        if dim < required_dim(nu):
            raise InputError(f"dim {dim} is below the truncation rule ({required_dim(nu)})")
        return natural_fock_basis(self.target, 0, dim)


@dataclass
class MaxEntSolution:
    state: StateOperator
    multipliers: tuple
    residuals: np.ndarray
    iterations: int
    dual_history: list = field(default_factory=list)
    entropy: float = float("nan")


class _Dual:
    def __init__(self, basis: FockBasis, target: np.ndarray):
        ops = quadratures(basis)
        self.basis = basis
        self.ops = [ops.q.matrix, ops.p.matrix, ops.q2.matrix, ops.p2.matrix]
        self.target = target

    def solve(self, lam):
        g = sum(l * o for l, o in zip(lam, self.ops))
        e, v = np.linalg.eigh(hermitize(g))
        log_z = float(logsumexp(-e))
        w = np.exp(-e - log_z)
        rho = hermitize((v * w) @ v.conj().T)
        moments = np.array([np.sum(rho.T * o).real for o in self.ops])
        return log_z + float(np.dot(lam, self.target)), moments, rho, w

    def moments(self, lam) -> np.ndarray:
        return self.solve(lam)[1]

    def jacobian(self, lam) -> np.ndarray:
        """d<O_i>/d l_j by symmetric differences."""
        jac = np.empty((4, 4))
        for j in range(4):
            h = FD_STEP * max(abs(lam[j]), 1.0)
            up = lam.copy()
            dn = lam.copy()
            up[j] += h
            dn[j] -= h
            jac[:, j] = (self.moments(up) - self.moments(dn)) / (2 * h)
        return jac


def initial_multipliers(m: Moments, scale: float = 1.0) -> np.ndarray:
    """Classical Gaussian exponent (q-Q)^2/2dQ^2 + (p-P)^2/2dP^2, times ``scale``."""
    Q, P, dQ, dP = m.as_row(0)
    lqq = scale / (2 * dQ * dQ)
    lpp = scale / (2 * dP * dP)
    return np.array([-2 * lqq * Q, -2 * lpp * P, lqq, lpp])


def solve_maxent(problem: MaxEntProblem) -> MaxEntSolution:
    m = problem.target
    Q, P, dQ, dP = m.as_row(0)
    nu = 2 * dQ * dP / m.hbar
    if nu <= 1 + 1e-6:
        raise Infeasible(f"nu = {nu:.6g}: no quantum state has these spreads")
    basis = problem.resolved_basis()
    if not math.isclose(basis.hbar, m.hbar, rel_tol=1e-14):
        raise InputError("basis hbar differs from target hbar")
    target = np.array([Q, P, Q * Q + dQ * dQ, P * P + dP * dP])
    dual = _Dual(basis, target)

    lam = initial_multipliers(m, problem.init_scale)
    gamma, moments, rho, w = dual.solve(lam)
    history = [gamma]
    for it in range(1, problem.max_iter + 1):
        resid = target - moments
        if np.max(np.abs(resid)) < problem.tol:
            return _finish(basis, lam, resid, it - 1, history, rho, w)
        step = np.linalg.solve(dual.jacobian(lam), resid)
        alpha = 1.0
        while True:
            trial = lam + alpha * step
            g_new, mom_new, rho_new, w_new = dual.solve(trial)
            slack = 1e-13 * max(1.0, abs(gamma))
            decreased = g_new < gamma
            # near the optimum the dual is flat to rounding; then judge by the residual
            polish = g_new <= gamma + slack and \
                np.linalg.norm(target - mom_new) < np.linalg.norm(resid)
            if decreased or polish:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise NoConvergence(f"line search stalled at iteration {it}, residual {resid}")
        lam, gamma, moments, rho, w = trial, g_new, mom_new, rho_new, w_new
        history.append(gamma)
    resid = target - moments
    if np.max(np.abs(resid)) < problem.tol:
        return _finish(basis, lam, resid, problem.max_iter, history, rho, w)
    raise NoConvergence(f"no convergence in {problem.max_iter} iterations, residual {resid}")


def _finish(basis, lam, resid, iterations, history, rho, w) -> MaxEntSolution:
    state = StateOperator(basis, rho)
    return MaxEntSolution(state, tuple(float(x) for x in lam), resid, iterations, history,
                          entropy_from_eigenvalues(w))


def trace_distance(a: StateOperator, b: StateOperator) -> float:
    if a.basis != b.basis:
        raise BasisMismatch("states live in different bases")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(hermitize(a.matrix - b.matrix)))))
