"""Maximum-entropy packets, quantum/classical moment dynamics and
identical-particle registration on truncated Hilbert spaces."""

from .hilbert import (
    FockBasis,
    GridBasis,
    Operator,
    StateOperator,
    WaveFunction,
    build_grid,
    expectation,
    hermitian_eig,
    momentum_operator,
    op_func,
    position_operator,
    purity,
    von_neumann_entropy,
)
from .mepacket import (
    Moments,
    gaussian_packet,
    k_operator,
    me_entropy_closed_form,
    me_packet,
    moments_of_state,
    nu_from_moments,
)

__all__ = [
    "FockBasis",
    "GridBasis",
    "Moments",
    "Operator",
    "StateOperator",
    "WaveFunction",
    "build_grid",
    "expectation",
    "gaussian_packet",
    "hermitian_eig",
    "k_operator",
    "me_entropy_closed_form",
    "me_packet",
    "moments_of_state",
    "momentum_operator",
    "nu_from_moments",
    "op_func",
    "position_operator",
    "purity",
    "von_neumann_entropy",
]
