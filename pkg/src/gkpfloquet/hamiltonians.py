"""Model Hamiltonians for the flux-driven oscillator.

Everything is expressed in units of the bare oscillator: hbar = 1,
omega_0 = 1, so one drive period is T = 2 pi and energies are in units of
hbar omega_0. Public time arguments are in units of T.

The target Hamiltonian is H_GKP = -J [cos(2 sqrt(pi) eta x) +
cos(2 sqrt(pi) p / eta)] with eta = 1 at the matched-impedance point
Z = 2 R_Q. The driven model is H(t) = a^dag a - J f(t) cos(2 sqrt(pi) eta x)
plus, for an asymmetric SQUID, a sine term switched on by ``ej_asymmetry``.
"""
from __future__ import annotations

import dataclasses
import warnings
from functools import cached_property, lru_cache

import numpy as np
from scipy import constants

from .fock import FockSpace, x_eigensystem as _x_eigensystem

__all__ = [
    "ModelParams",
    "CircuitParams",
    "DriveFunction",
    "ModelOperators",
    "model_operators",
    "gkp_hamiltonian",
    "truncated_gkp_hamiltonian",
    "drive_value",
    "driven_hamiltonian",
    "circuit_map",
]

TWO_ROOT_PI = 2.0 * np.sqrt(np.pi)


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of the driven-oscillator model.

    j_over_omega0    target coupling J / omega_0 (2.5e-3 for the reference
                     circuit: E_J/h = 2 GHz, omega_0/2pi = 1 GHz,
                     epsilon = 1.25e-3)
    n_harmonics      N, number of drive harmonics; the drive contains
                     frequencies 4 n omega_0 for n = 1..N
    impedance_ratio  Z / (2 R_Q); deviations rescale the phase operator to
                     2 sqrt(pi) eta x with eta = sqrt(impedance_ratio)
    ej_asymmetry     junction asymmetry d: E_J(1 +/- d) on the two arms
    epsilon          drive amplitude hbar J / E_J; fixes E_J/hbar = J/epsilon,
                     which only enters through the asymmetry term
    """

    j_over_omega0: float = 2.5e-3
    n_harmonics: int = 4
    impedance_ratio: float = 1.0
    ej_asymmetry: float = 0.0
    epsilon: float = 1.25e-3

    def __post_init__(self):
        if not self.j_over_omega0 > 0:
            raise ValueError("j_over_omega0 must be positive")
        if not (isinstance(self.n_harmonics, (int, np.integer)) and self.n_harmonics >= 1):
            raise ValueError("n_harmonics must be an integer >= 1")
        if not 0.5 < self.impedance_ratio < 1.5:
            raise ValueError("impedance_ratio outside the supported window (0.5, 1.5)")
        if not abs(self.ej_asymmetry) < 0.5:
            raise ValueError("ej_asymmetry must satisfy |d| < 0.5")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def eta(self) -> float:
        return float(np.sqrt(self.impedance_ratio))

    @property
    def ej_over_hbar(self) -> float:
        """E_J / (hbar omega_0) = (J/omega_0) / epsilon."""
        return self.j_over_omega0 / self.epsilon


@dataclasses.dataclass(frozen=True)
class CircuitParams:
    """Laboratory-frame circuit parameters (GHz for frequencies, SI for L, C).

    ``l``, ``c`` and ``c_j`` are optional; when given they fix the circuit
    impedance Z = sqrt(L / C_Sigma) with C_Sigma = 2 C_J + C and must be
    consistent with ``omega0_over_2pi`` = 1/(2 pi sqrt(L C_Sigma)).
    """

    ej_over_h: float  # GHz
    omega0_over_2pi: float  # GHz
    epsilon: float
    l: float | None = None  # H
    c: float | None = None  # F
    c_j: float | None = None  # F
    n_harmonics: int = 4
    ej_asymmetry: float = 0.0

    def __post_init__(self):
        if self.ej_over_h <= 0 or self.omega0_over_2pi <= 0 or self.epsilon <= 0:
            raise ValueError("ej_over_h, omega0_over_2pi and epsilon must be positive")
        given = [v is not None for v in (self.l, self.c, self.c_j)]
        if any(given) and not all(given):
            raise ValueError("specify all of l, c, c_j or none of them")
        if all(given) and min(self.l, self.c, self.c_j) <= 0:
            raise ValueError("l, c, c_j must be positive")
        excursion = self.epsilon * (2.0 + 4.0 * self.n_harmonics)
        if excursion > 0.1:
            warnings.warn(
                f"peak flux excursion eps*(2+4N) = {excursion:.3g} phi_0 is not small; "
                "the linearized drive model may be inaccurate",
                stacklevel=2,
            )


@dataclasses.dataclass(frozen=True)
class DriveFunction:
    """Periodic drive profile f(t).

    kind = "harmonic":  f(t) = 2 + 4 sum_{n=1..N} cos(4 n omega_0 t), a
    band-limited approximation of the kick train with N harmonics.
    kind = "delta-kick": the ideal train f(t) = (T/2) sum_n delta(t - nT/4);
    it has no pointwise values and is only usable through the kicked
    propagator.
    """

    kind: str = "harmonic"
    n_harmonics: int = 4

    def __post_init__(self):
        if self.kind not in ("harmonic", "delta-kick"):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if not (isinstance(self.n_harmonics, (int, np.integer)) and self.n_harmonics >= 1):
            raise ValueError("n_harmonics must be an integer >= 1")


def drive_value(drive: DriveFunction, t):
    """f(t) with t in units of T. Delta-kick drives have no pointwise value."""
    if drive.kind != "harmonic":
        raise ValueError("pointwise evaluation is only defined for harmonic drives")
    t = np.asarray(t, dtype=float)
    n = np.arange(1, drive.n_harmonics + 1)
    val = 2.0 + 4.0 * np.cos(8.0 * np.pi * np.multiply.outer(t, n)).sum(axis=-1)
    return val if val.ndim else float(val)


class ModelOperators:
    """Trigonometric operators of the scaled phase theta = 2 sqrt(pi) eta x.

    ``vecs``/``angles`` diagonalize the phase operator itself:
    theta = vecs @ diag(angles) @ vecs.T with real orthogonal ``vecs``.
    The split-step propagator reuses this basis to exponentiate arbitrary
    cos/sin combinations of theta exactly, so building the Hamiltonian here
    and propagating in :mod:`gkpfloquet.evolve` are consistent by
    construction.
    """

    def __init__(self, space: FockSpace, eta: float):
        if not isinstance(space, FockSpace):
            raise ValueError("space must be a FockSpace")
        self.space = space
        self.eta = float(eta)
        xi, vecs = _x_eigensystem(space.dim)
        self.angles = TWO_ROOT_PI * self.eta * xi
        self.vecs = vecs

    @cached_property
    def cos_x(self) -> np.ndarray:
        m = (self.vecs * np.cos(self.angles)) @ self.vecs.T
        m.setflags(write=False)
        return m

    @cached_property
    def sin_x(self) -> np.ndarray:
        m = (self.vecs * np.sin(self.angles)) @ self.vecs.T
        m.setflags(write=False)
        return m

    @cached_property
    def cos_p(self) -> np.ndarray:
        """cos(2 sqrt(pi) p / eta) = R(pi/2) cos(2 sqrt(pi) x / eta) R(-pi/2)."""
        xi, vecs = _x_eigensystem(self.space.dim)
        cosx_conj = (vecs * np.cos(TWO_ROOT_PI / self.eta * xi)) @ vecs.T
        r = np.exp(0.5j * np.pi * self.space.number_diag)
        m = (r[:, None] * cosx_conj) * r.conj()[None, :]
        m.setflags(write=False)
        return m


@lru_cache(maxsize=32)
def _model_operators_cached(dim: int, eta: float) -> ModelOperators:
    return ModelOperators(FockSpace(dim), eta)


def model_operators(space: FockSpace, eta: float = 1.0) -> ModelOperators:
    """Cached :class:`ModelOperators` for the given space and eta."""
    return _model_operators_cached(space.dim, float(eta))


def gkp_hamiltonian(space: FockSpace, params: ModelParams) -> np.ndarray:
    """Target H_GKP = -J [cos(2 sqrt(pi) eta x) + cos(2 sqrt(pi) p/eta)]."""
    ops = model_operators(space, params.eta)
    h = -params.j_over_omega0 * (ops.cos_x + ops.cos_p)
    return 0.5 * (h + h.conj().T)


def truncated_gkp_hamiltonian(space: FockSpace, params: ModelParams) -> np.ndarray:
    """H_GKP with all Fock diagonals beyond +/- 4 N zeroed.

    This is the first-order effective Hamiltonian generated by an N-harmonic
    drive: the n-th harmonic contributes the diagonals m - n = +/- 4n.
    """
    h = gkp_hamiltonian(space, params).copy()
    m, n = np.indices(h.shape)
    h[np.abs(m - n) > 4 * params.n_harmonics] = 0.0
    return h


def driven_hamiltonian(space: FockSpace, params: ModelParams, drive: DriveFunction, t: float) -> np.ndarray:
    """Lab-frame H(t)/hbar in units of omega_0, with t in units of T.

    H(t) = a^dag a - J f(t) cos(2 sqrt(pi) eta x)
         - 2 d (E_J/hbar) cos(eps f(t)/2) sin(2 sqrt(pi) eta x)

    The sine term is the residual of an asymmetric SQUID (arms E_J(1+d),
    E_J(1-d)) biased at phi_e/phi_0 = pi - eps f(t); its prefactor
    sin(phi_e/(2 phi_0)) = cos(eps f(t)/2) stays within O(1e-4) of 1 for the
    reference drive.
    """
    f = drive_value(drive, t)  # raises for delta-kick drives
    ops = model_operators(space, params.eta)
    h = space.number - params.j_over_omega0 * f * ops.cos_x
    d = params.ej_asymmetry
    if d != 0.0:
        coeff = 2.0 * d * params.ej_over_hbar * np.cos(0.5 * params.epsilon * f)
        h = h - coeff * ops.sin_x
    return h


def drive_coefficients(params: ModelParams, f):
    """Scalar coefficients (c_cos, c_sin) multiplying cos/sin of the phase
    operator in H(t), for a drive value (or array of values) ``f``.

    Shared between :func:`driven_hamiltonian` and the split-step propagator
    so the two can never drift apart.
    """
    f = np.asarray(f, dtype=float)
    c_cos = -params.j_over_omega0 * f
    d = params.ej_asymmetry
    if d != 0.0:
        c_sin = -2.0 * d * params.ej_over_hbar * np.cos(0.5 * params.epsilon * f)
    else:
        c_sin = np.zeros_like(f)
    return c_cos, c_sin


# resistance quantum for a Cooper pair, h / (2e)^2
RESISTANCE_QUANTUM_2E = constants.h / (2.0 * constants.e) ** 2


def circuit_map(circuit: CircuitParams):
    """Map circuit parameters to :class:`ModelParams` plus a derived report.

    Returns ``(params, report)`` where ``report`` lists the quantities an
    experiment would check first: J/omega_0, the maximum flux-modulation
    frequency 4 N omega_0/2pi, the peak excursion of phi_e/phi_0 away from
    pi, and the impedance ratio Z/(2 R_Q).
    """
    j_over_omega0 = circuit.epsilon * circuit.ej_over_h / circuit.omega0_over_2pi
    if circuit.l is not None:
        c_sigma = 2.0 * circuit.c_j + circuit.c
        omega0 = 1.0 / np.sqrt(circuit.l * c_sigma)
        stated = 2.0 * np.pi * circuit.omega0_over_2pi * 1e9
        if abs(omega0 - stated) > 1e-2 * stated:
            raise ValueError(
                f"stated omega0/2pi = {circuit.omega0_over_2pi} GHz is inconsistent "
                f"with 1/(2 pi sqrt(L C_Sigma)) = {omega0 / (2e9 * np.pi):.4f} GHz"
            )
        impedance_ratio = np.sqrt(circuit.l / c_sigma) / (2.0 * RESISTANCE_QUANTUM_2E)
    else:
        impedance_ratio = 1.0
    params = ModelParams(
        j_over_omega0=j_over_omega0,
        n_harmonics=circuit.n_harmonics,
        impedance_ratio=float(impedance_ratio),
        ej_asymmetry=circuit.ej_asymmetry,
        epsilon=circuit.epsilon,
    )
    report = {
        "j_over_omega0": j_over_omega0,
        "max_modulation_freq_ghz": 4.0 * circuit.n_harmonics * circuit.omega0_over_2pi,
        "peak_flux_excursion": circuit.epsilon * (2.0 + 4.0 * circuit.n_harmonics),
        "impedance_ratio": float(impedance_ratio),
    }
    return params, report
