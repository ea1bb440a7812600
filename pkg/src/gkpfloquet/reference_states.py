"""Reference GKP states built directly from position combs.

These are oracles for the decoder and the squeezing metrics, constructed
without any dynamics: logical |mu> is the comb of position eigenstates at
x = sqrt(pi)(2s + mu), regularized by the energy envelope exp(-beta n).
"""
from __future__ import annotations

import numpy as np

from .fock import FockSpace, StateVector, hermite_functions
from .metrics import HADAMARD_MINUS, HADAMARD_PLUS

__all__ = [
    "comb_coefficients",
    "logical_state",
    "magic_state",
]

ROOT_PI = np.sqrt(np.pi)


def comb_coefficients(space: FockSpace, mu: int, beta: float) -> np.ndarray:
    """Unnormalized Fock coefficients of exp(-beta n) sum_s |x = sqrt(pi)(2s+mu)>.

    A position eigenstate |x0> has coefficients h_n(x0), so the comb is the
    plain s-sum over the basis functions; the envelope then damps each level.
    The s-range covers every comb site inside the classically allowed region
    of the space plus a two-site pad.
    """
    if mu not in (0, 1):
        raise ValueError("mu must be 0 or 1")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    turning = np.sqrt(2.0 * space.dim + 1.0)
    s_max = int(np.ceil(turning / (2.0 * ROOT_PI))) + 2
    # sum positive sites and reflect: combs are exact parity eigenstates,
    # so odd coefficients vanish identically instead of to roundoff
    if mu == 0:
        positive = ROOT_PI * 2.0 * np.arange(1, s_max + 1)
        coeffs = hermite_functions(space.dim, np.array([0.0]))[:, 0]
    else:
        positive = ROOT_PI * (2.0 * np.arange(0, s_max + 1) + 1.0)
        coeffs = np.zeros(space.dim)
    coeffs = coeffs + 2.0 * hermite_functions(space.dim, positive).sum(axis=1)
    coeffs[1::2] = 0.0
    return coeffs * np.exp(-beta * np.arange(space.dim))


def logical_state(space: FockSpace, mu: int, beta: float = 0.05) -> StateVector:
    """Finite-energy approximant of the logical basis state |mu_L>."""
    return StateVector.from_unnormalized(space, comb_coefficients(space, mu, beta))


def magic_state(space: FockSpace, beta: float = 0.05, sign: int = +1) -> StateVector:
    """Finite-energy Hadamard eigenstate, exp(-beta n)(a|0_L> + b|1_L>).

    The envelope acts on the ideal superposition, so sign = +1 gives the
    regularized |H+> = cos(pi/8)|0_L> + sin(pi/8)|1_L> and sign = -1 its
    orthogonal partner.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    weights = HADAMARD_PLUS if sign == +1 else HADAMARD_MINUS
    coeffs = weights[0] * comb_coefficients(space, 0, beta) + weights[1] * comb_coefficients(space, 1, beta)
    return StateVector.from_unnormalized(space, coeffs)
