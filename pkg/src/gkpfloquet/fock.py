"""Truncated Fock-space primitives for a single bosonic mode.

Conventions used throughout the package: hbar = 1, quadratures
x = (a^dag + a)/sqrt(2) and p = i(a^dag - a)/sqrt(2), so [x, p] = i.
The displacement operator is D(alpha) = exp(alpha a^dag - alpha* a) and
the rotation R(theta) = exp(i theta a^dag a).
"""
from __future__ import annotations

import dataclasses
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import TruncationError

__all__ = [
    "FockSpace",
    "StateVector",
    "DensityMatrix",
    "displacement",
    "rotation",
    "hermite_functions",
    "position_wavefunction",
    "momentum_wavefunction",
    "x_eigensystem",
]


@dataclasses.dataclass(frozen=True)
class FockSpace:
    """Single-mode Hilbert space truncated to ``dim`` Fock levels.

    Operator matrices are built once per instance and cached read-only.
    ``dim = 250`` is the working default for all GKP computations in this
    package; convergence of headline numbers is checked at 300.
    """

    dim: int = 250

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")

    @cached_property
    def annihilation(self) -> np.ndarray:
        a = np.diagflat(np.sqrt(np.arange(1.0, self.dim)), 1)
        a.setflags(write=False)
        return a

    @cached_property
    def creation(self) -> np.ndarray:
        adag = self.annihilation.T.copy()
        adag.setflags(write=False)
        return adag

    @cached_property
    def number(self) -> np.ndarray:
        n = np.diagflat(np.arange(self.dim, dtype=float))
        n.setflags(write=False)
        return n

    @cached_property
    def number_diag(self) -> np.ndarray:
        n = np.arange(self.dim, dtype=float)
        n.setflags(write=False)
        return n

    @cached_property
    def x(self) -> np.ndarray:
        xop = (self.creation + self.annihilation) / np.sqrt(2.0)
        xop.setflags(write=False)
        return xop

    @cached_property
    def p(self) -> np.ndarray:
        pop = 1j * (self.creation - self.annihilation) / np.sqrt(2.0)
        pop.setflags(write=False)
        return pop

    def identity(self) -> np.ndarray:
        return np.eye(self.dim)

    def basis_state(self, n: int) -> "StateVector":
        if not 0 <= n < self.dim:
            raise ValueError(f"Fock index {n} outside [0, {self.dim})")
        data = np.zeros(self.dim, dtype=complex)
        data[n] = 1.0
        return StateVector(self, data)

    def coherent_state(self, alpha: complex) -> "StateVector":
        n = np.arange(self.dim)
        logmag = n * np.log(np.abs(alpha)) - 0.5 * gammaln(n + 1.0) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
        phase = np.exp(1j * n * np.angle(alpha))
        data = np.exp(logmag - 0.5 * np.abs(alpha) ** 2) * phase
        return StateVector(self, data / np.linalg.norm(data))


def _check_space(space: FockSpace) -> FockSpace:
    if not isinstance(space, FockSpace):
        raise ValueError(f"expected a FockSpace, got {type(space).__name__}")
    return space


@dataclasses.dataclass
class StateVector:
    """Normalized pure state in a :class:`FockSpace`.

    The constructor enforces normalization to 1e-9; propagation code that
    works with unnormalized vectors (e.g. quantum-jump norm decay) operates
    on bare arrays and wraps results only at API boundaries.
    """

    space: FockSpace
    data: np.ndarray

    def __post_init__(self):
        _check_space(self.space)
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.space.dim,):
            raise ValueError(
                f"state shape {self.data.shape} does not match dim {self.space.dim}"
            )
        nrm = np.linalg.norm(self.data)
        if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond 1e-9")

    @classmethod
    def from_unnormalized(cls, space: FockSpace, data: np.ndarray) -> "StateVector":
        data = np.asarray(data, dtype=complex)
        nrm = np.linalg.norm(data)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise ValueError("cannot normalize zero or non-finite vector")
        return cls(space, data / nrm)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.data, other.data))

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.data, op @ self.data))

    def mean_photon_number(self) -> float:
        return float(np.sum(self.space.number_diag * np.abs(self.data) ** 2))

    def leakage(self, top_fraction: float = 0.1) -> float:
        """Population in the top ``top_fraction`` of Fock levels."""
        k = max(1, int(np.ceil(self.space.dim * top_fraction)))
        return float(np.sum(np.abs(self.data[-k:]) ** 2))

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.data, self.data.conj()))


@dataclasses.dataclass
class DensityMatrix:
    """Hermitian, unit-trace operator on a :class:`FockSpace`.

    Positivity is only checked on demand (:meth:`validate_positive`): a
    full eigendecomposition is too costly to run on every construction.
    """

    space: FockSpace
    data: np.ndarray

    def __post_init__(self):
        _check_space(self.space)
        self.data = np.asarray(self.data, dtype=complex)
        d = self.space.dim
        if self.data.shape != (d, d):
            raise ValueError(f"shape {self.data.shape} does not match ({d}, {d})")
        tr = np.trace(self.data)
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"trace {tr} deviates from 1 beyond 1e-9")
        herm = np.max(np.abs(self.data - self.data.conj().T))
        if herm > 1e-10:
            raise ValueError(f"Hermiticity violation {herm:.2e} beyond 1e-10")

    @classmethod
    def from_states(cls, states, weights=None) -> "DensityMatrix":
        """Convex mixture of pure states (uniform weights by default)."""
        states = list(states)
        if not states:
            raise ValueError("need at least one state")
        space = states[0].space
        if weights is None:
            weights = np.full(len(states), 1.0 / len(states))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(states),) or np.any(weights < 0):
            raise ValueError("weights must be a nonnegative vector matching states")
        weights = weights / weights.sum()
        rho = np.zeros((space.dim, space.dim), dtype=complex)
        for w, st in zip(weights, states):
            if st.space != space:
                raise ValueError("all states must share one FockSpace")
            rho += w * np.outer(st.data, st.data.conj())
        rho = 0.5 * (rho + rho.conj().T)
        return cls(space, rho)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.data @ op))

    def mean_photon_number(self) -> float:
        return float(np.real(np.sum(self.space.number_diag * np.diag(self.data))))

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    def leakage(self, top_fraction: float = 0.1) -> float:
        k = max(1, int(np.ceil(self.space.dim * top_fraction)))
        return float(np.real(np.sum(np.diag(self.data)[-k:])))

    def validate_positive(self, tol: float = 1e-9) -> None:
        evals = np.linalg.eigvalsh(self.data)
        if evals[0] < -tol:
            raise ValueError(f"negative eigenvalue {evals[0]:.2e} beyond -{tol}")


@lru_cache(maxsize=8)
def x_eigensystem(dim: int):
    """Eigendecomposition of the x quadrature: x = vecs @ diag(xi) @ vecs.T.

    The eigenvectors are real orthogonal; shared by every routine that
    applies a function of a single quadrature (potential exponentials,
    displaced-parity Wigner evaluation, binned-sign decoder operators).
    """
    xi, vecs = np.linalg.eigh(FockSpace(dim).x)
    xi.setflags(write=False)
    vecs.setflags(write=False)
    return xi, vecs


def displacement(space: FockSpace, alpha: complex, method: str = "generator") -> np.ndarray:
    """Matrix of D(alpha) = exp(alpha a^dag - alpha* a).

    ``generator`` exponentiates the anti-Hermitian generator through a
    Hermitian eigendecomposition, which is exactly unitary in the truncated
    space. ``laguerre`` evaluates the closed-form matrix elements
    sqrt(n!/m!) alpha^(m-n) e^(-|alpha|^2/2) L_n^(m-n)(|alpha|^2); it is
    accurate for moderate |alpha| and used as an independent cross-check.
    """
    _check_space(space)
    alpha = complex(alpha)
    if method == "generator":
        # H = -i(alpha a^dag - alpha* a) is Hermitian and D = exp(iH).
        gen = -1j * (alpha * space.creation - np.conj(alpha) * space.annihilation)
        evals, vecs = np.linalg.eigh(gen)
        return (vecs * np.exp(1j * evals)) @ vecs.conj().T
    if method == "laguerre":
        d = space.dim
        m, n = np.indices((d, d))
        lo, hi = np.minimum(m, n), np.maximum(m, n)
        k = hi - lo
        asq = abs(alpha) ** 2
        base = np.exp(0.5 * (gammaln(lo + 1.0) - gammaln(hi + 1.0)) - 0.5 * asq)
        lag = eval_genlaguerre(lo, k, asq)
        amp = np.where(m >= n, alpha, -np.conj(alpha)) ** k
        return base * lag * amp
    raise ValueError(f"unknown method {method!r}")


def rotation(space: FockSpace, theta: float) -> np.ndarray:
    """Matrix of R(theta) = exp(i theta a^dag a) (diagonal in Fock basis)."""
    _check_space(space)
    return np.diagflat(np.exp(1j * float(theta) * space.number_diag))


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions h_0..h_(n_max-1) on a grid, shape (n_max, len(x)).

    Uses the normalized three-term recurrence
    h_n = sqrt(2/n) x h_(n-1) - sqrt((n-1)/n) h_(n-2), which keeps every
    intermediate bounded; the textbook physicists' recurrence overflows
    beyond n ~ 85.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise ValueError("grid points must be finite")
    out = np.empty((n_max, x.size), dtype=float)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, n_max):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1.0) / n) * out[n - 2]
        if not np.all(np.isfinite(out[n])):
            raise TruncationError(f"Hermite recurrence produced non-finite values at n={n}")
    return out


def position_wavefunction(space: FockSpace, state, x: np.ndarray) -> np.ndarray:
    """psi(x) = sum_n c_n h_n(x) for a state vector (or its coefficients)."""
    _check_space(space)
    coeffs = state.data if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    if coeffs.shape != (space.dim,):
        raise ValueError(f"coefficient shape {coeffs.shape} does not match dim {space.dim}")
    h = hermite_functions(space.dim, np.asarray(x, dtype=float))
    return coeffs @ h


def momentum_wavefunction(space: FockSpace, state, p: np.ndarray) -> np.ndarray:
    """Momentum wavefunction via psi~(p) = sum_n (-i)^n c_n h_n(p)."""
    _check_space(space)
    coeffs = state.data if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    phases = (-1j) ** np.arange(space.dim)
    return position_wavefunction(space, coeffs * phases, p)
