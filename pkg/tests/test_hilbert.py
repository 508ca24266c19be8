import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emergence.errors import (
    BasisMismatch,
    DegenerateInterval,
    DomainViolation,
    NonPowerOfTwo,
    NotHermitian,
)
from emergence.hilbert import (
    FockBasis,
    Operator,
    StateOperator,
    build_grid,
    expectation,
    hermitian_eig,
    identity,
    momentum_operator,
    op_func,
    position_operator,
    projector,
    purity,
    von_neumann_entropy,
)
from emergence.mepacket import Moments, me_packet

from helpers import gaussian


def random_hermitian(rng, dim, radius=None):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    if radius is not None:
        h *= radius / np.max(np.abs(np.linalg.eigvalsh(h)))
    return h


def test_build_grid_spacing():
    g = build_grid(-8, 8, 128)
    assert g.spacing == pytest.approx(16 / 127, rel=1e-15)
    assert g.x[0] == -8 and g.x[-1] == 8
    assert np.allclose(np.diff(g.x), g.spacing)


def test_build_grid_errors():
    with pytest.raises(DegenerateInterval):
        build_grid(0, 0, 64)
    with pytest.raises(NonPowerOfTwo):
        build_grid(-8, 8, 100)
    with pytest.raises(NonPowerOfTwo):
        build_grid(-8, 8, 4)


def test_position_operator():
    g = build_grid(-12, 12, 256)
    q = position_operator(g)
    assert q.matrix[0, 0] == -12
    rho = projector(gaussian(g, 2.0, 1.0))
    assert expectation(rho, q) == pytest.approx(2.0, abs=1e-8)


def test_position_expectation_on_me_packet():
    g = build_grid(-12, 12, 256)
    rho = me_packet(Moments.single(1.5, 0.0, 1.0, 1.0), g)
    assert expectation(rho, position_operator(g)) == pytest.approx(1.5, abs=1e-6)


def test_momentum_matches_finite_difference():
    g = build_grid(-8, 8, 128)
    x = g.x
    f = np.exp(-x ** 2 / 2)
    p = momentum_operator(g, 1.0)
    spectral = p.matrix @ f
    # -i d/dx by a 4th-order central difference on the analytic function
    h = 1e-3
    fd = -1j * (-np.exp(-(x + 2 * h) ** 2 / 2) + 8 * np.exp(-(x + h) ** 2 / 2)
                - 8 * np.exp(-(x - h) ** 2 / 2) + np.exp(-(x - 2 * h) ** 2 / 2)) / (12 * h)
    interior = slice(2, -2)
    assert np.max(np.abs(spectral[interior] - fd[interior])) < 1e-6


def test_momentum_expectations():
    g = build_grid(-12, 12, 256)
    p = momentum_operator(g, 1.0)
    assert abs(expectation(projector(gaussian(g, 0.0, 1.0)), p)) < 1e-10
    # Gaussian times exp(i P0 x): <p> = P0 exactly in the continuum
    assert expectation(projector(gaussian(g, 0.0, 1.0, momentum=0.7)), p) == pytest.approx(0.7, abs=1e-6)


def test_hermitian_eig_basic():
    b = FockBasis(4)
    w, _ = hermitian_eig(identity(b))
    assert np.allclose(w, 1)
    w, _ = hermitian_eig(Operator(FockBasis(3), np.diag([3.0, 1.0, 2.0]), True))
    assert np.allclose(w, [1, 2, 3])
    with pytest.raises(NotHermitian):
        hermitian_eig(Operator(FockBasis(2), np.array([[0, 1], [0, 0]])))


def test_hermitian_eig_random():
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 32)
    w, v = hermitian_eig(Operator(FockBasis(32), h, True))
    assert np.max(np.abs(v.conj().T @ v - np.eye(32))) < 1e-10
    recon = (v * w) @ v.conj().T
    assert np.linalg.norm(recon - h) / np.linalg.norm(h) < 1e-9


def test_op_func_exp_small_cases():
    b = FockBasis(2)
    assert np.allclose(op_func(Operator(b, np.zeros((2, 2)), True), "exp").matrix, np.eye(2))
    d = op_func(Operator(b, np.diag([math.log(2), math.log(3)]), True), "exp")
    assert np.allclose(d.matrix, np.diag([2, 3]), atol=1e-14)


def test_op_func_exp_against_taylor():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 16, radius=1.9)
    term = np.eye(16, dtype=complex)
    total = term.copy()
    for k in range(1, 30):
        term = term @ h / k
        total += term
    got = op_func(Operator(FockBasis(16), h, True), "exp").matrix
    assert np.linalg.norm(got - total) < 1e-10


def test_op_func_domain():
    b = FockBasis(2)
    with pytest.raises(DomainViolation):
        op_func(Operator(b, np.diag([-1.0, 1.0]), True), "log")
    with pytest.raises(DomainViolation):
        op_func(Operator(b, np.diag([-1.0, 1.0]), True), "sqrt")
    s = op_func(Operator(b, np.diag([4.0, 9.0]), True), "sqrt")
    assert np.allclose(s.matrix, np.diag([2, 3]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 12))
def test_exp_log_roundtrip(seed, dim):
    h = random_hermitian(np.random.default_rng(seed), dim, radius=5.0)
    a = Operator(FockBasis(dim), h, True)
    back = op_func(op_func(a, "exp"), "log")
    assert np.linalg.norm(back.matrix - h) < 1e-8


def random_state(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    r = a @ a.conj().T
    r = (r + r.conj().T) / 2
    return r / np.trace(r).real


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_expectation_linear(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    b = FockBasis(6)
    rho = StateOperator(b, random_state(rng, 6))
    A = Operator(b, random_hermitian(rng, 6), True)
    B = Operator(b, random_hermitian(rng, 6), True)
    lhs = expectation(rho, alpha * A + beta * B)
    rhs = alpha * expectation(rho, A) + beta * expectation(rho, B)
    assert abs(lhs - rhs) < 1e-10


def test_expectation_identity_and_mismatch():
    rng = np.random.default_rng(0)
    rho = StateOperator(FockBasis(5), random_state(rng, 5))
    assert expectation(rho, identity(FockBasis(5))) == pytest.approx(1, abs=1e-10)
    with pytest.raises(BasisMismatch):
        expectation(rho, identity(FockBasis(5, hbar=2.0)))


def test_expectation_centered_gaussian():
    g = build_grid(-12, 12, 256)
    assert abs(expectation(projector(gaussian(g, 0.0, 1.0)), position_operator(g))) < 1e-12


def test_state_invariants_enforced():
    b = FockBasis(2)
    with pytest.raises(ValueError):
        StateOperator(b, np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):
        StateOperator(b, np.diag([1.5, -0.5]))
    with pytest.raises(NotHermitian):
        StateOperator(b, np.array([[0.5, 0.1], [0.0, 0.5]]))


def test_entropy_and_purity_simple():
    g = build_grid(-12, 12, 256)
    pure = projector(gaussian(g, 1.0, 0.7))
    assert abs(von_neumann_entropy(pure)) < 1e-9
    assert purity(pure) == pytest.approx(1.0, abs=1e-12)
    for d in (2, 4, 7):
        mixed = StateOperator(FockBasis(d), np.eye(d) / d)
        assert von_neumann_entropy(mixed) == pytest.approx(math.log(d), abs=1e-12)
    assert purity(StateOperator(FockBasis(4), np.eye(4) / 4)) == pytest.approx(0.25)


def test_me_packet_entropy_and_purity_values():
    rho3 = me_packet(Moments.single(0, 0, 1.5, 1.0))  # nu = 3
    assert von_neumann_entropy(rho3) == pytest.approx(2 * math.log(2), abs=1e-6)
    rho2 = me_packet(Moments.single(0, 0, 1, 1))  # nu = 2
    # geometric populations (1 - l) l^n with l = 1/3: purity (1 - l)/(1 + l)
    assert purity(rho2) == pytest.approx(0.5, abs=1e-6)


def test_entropy_basis_independent():
    m = Moments.single(0.3, -0.2, 1.0, 1.0)
    fock = me_packet(m)
    grid = me_packet(m, build_grid(-12, 12, 256))
    assert abs(von_neumann_entropy(fock) - von_neumann_entropy(grid)) < 1e-6
