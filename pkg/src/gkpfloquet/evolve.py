"""Batched split-step evolution of the driven oscillator.

The instantaneous generator n_hat + c_cos(t) cos(theta) + c_sin(t)
sin(theta) - i (kappa/2) n_hat splits into a Fock-diagonal part (number
plus damping) and a phase-diagonal drive part; each flow is
exponentiated exactly in its own basis, so every step is a product of
exact factors and the only error is the splitting itself. Steps are
composed to 2nd order (Strang) or 4th order (triple-jump composition of
Strang); states evolve as (dim, M) column batches so trajectory
ensembles share the basis-change matmuls.

Quantum-jump unraveling of zero-temperature loss: columns evolve under
the no-jump generator (norm decays), and when a column's squared norm
falls below its uniform threshold the jump time is located by bisection
inside the offending step, the annihilation operator is applied there,
the column is renormalized, the threshold redrawn, and the remainder of
the step completed. Each column owns its random stream, so an ensemble
partitioned into batches of any size reproduces identical trajectories.

Times are in units of the resonant period T (one step of dt advances the
physical time by 2 pi dt / omega_0); the loss rate ``damping`` is kappa
in units of omega_0.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import NumericsError
from .fock import FockSpace
from .hamiltonians import model_operators

__all__ = ["JumpRecord", "TrajectoryState", "SplitStepEngine"]

# triple-jump composition: Strang substeps of length w1, w0, w1 (w0 < 0)
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


@dataclasses.dataclass(frozen=True)
class JumpRecord:
    """One loss event: which trajectory column jumped, and when (units of T)."""

    column: int
    time: float


@dataclasses.dataclass
class TrajectoryState:
    """Per-column jump bookkeeping that persists across evolution windows.

    One random generator per column keeps trajectories independent of how
    an ensemble is partitioned into batches.
    """

    rngs: list
    thresholds: np.ndarray
    jumps: list

    @classmethod
    def start(cls, rngs) -> "TrajectoryState":
        rngs = list(rngs)
        if not rngs:
            raise ValueError("need at least one generator")
        return cls(rngs=rngs, thresholds=np.array([g.random() for g in rngs]), jumps=[])


class SplitStepEngine:
    """Split-step propagator bound to one Fock space and phase scaling."""

    def __init__(self, space: FockSpace, eta: float = 1.0, order: int = 4):
        if not isinstance(space, FockSpace):
            raise ValueError("space must be a FockSpace")
        if order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        ops = model_operators(space, eta)
        self.space = space
        self.order = order
        self.number = space.number_diag.astype(float)
        self.cos_angles = np.cos(ops.angles)
        self.sin_angles = np.sin(ops.angles)
        # real basis-change matrices; complex columns are viewed as
        # interleaved real pairs so the matmuls run in dgemm
        self._to_theta = np.ascontiguousarray(ops.vecs.T)
        self._from_theta = np.ascontiguousarray(ops.vecs)
        if order == 2:
            self._lengths = (1.0,)
            self._offsets = (0.5,)
        else:
            self._lengths = (_W1, _W0, _W1)
            self._offsets = (0.5 * _W1, _W1 + 0.5 * _W0, _W1 + _W0 + 0.5 * _W1)

    def substep_times(self, t0: float, dt: float, n_steps: int) -> np.ndarray:
        """Drive-evaluation times, shape (n_steps, substeps per step)."""
        starts = t0 + dt * np.arange(n_steps)
        return starts[:, None] + dt * np.asarray(self._offsets)[None, :]

    def _rotate(self, mat: np.ndarray, psi: np.ndarray) -> np.ndarray:
        return (mat @ psi.view(np.float64)).view(np.complex128)

    def run(self, psi: np.ndarray, t0: float, dt: float, n_steps: int, coeff_fn,
            damping: float = 0.0, trajectory: TrajectoryState | None = None):
        """Evolve a (dim, M) batch over n_steps of size dt starting at t0.

        ``coeff_fn(times)`` maps a time array of shape (K,) to the drive
        coefficients (c_cos, c_sin), each scalar, (K,) or (K, M); it is
        called once per window with the substep midpoint times. The input
        batch is copied, never mutated; returns (psi, t_end).
        """
        psi = np.array(psi, dtype=np.complex128, order="C", copy=True)
        if psi.ndim != 2 or psi.shape[0] != self.space.dim:
            raise ValueError(f"psi must be ({self.space.dim}, M)")
        n_cols = psi.shape[1]
        times = self.substep_times(t0, dt, n_steps)

        def as_rows(c):
            c = np.asarray(c, dtype=float)
            if c.ndim == 0:
                return np.broadcast_to(c, (times.size,))
            if c.shape not in ((times.size,), (times.size, n_cols)):
                raise ValueError(f"coefficient shape {c.shape} does not match "
                                 f"{times.size} substeps x {n_cols} columns")
            return c

        c_cos, c_sin = map(as_rows, coeff_fn(times.ravel()))

        h = 2.0 * np.pi * dt  # physical step
        # Fock-diagonal half factors, one per distinct substep length
        half_factors = [
            np.exp((-1j - 0.5 * damping) * (0.5 * length * h) * self.number)[:, None]
            for length in self._lengths
        ]
        n_sub = len(self._lengths)
        watch_jumps = trajectory is not None and damping > 0.0
        for k in range(n_steps):
            t_step = t0 + k * dt
            if watch_jumps:
                step_start = psi.copy()
            for s, length in enumerate(self._lengths):
                idx = k * n_sub + s
                cc, cs = c_cos[idx], c_sin[idx]
                if np.ndim(cc):
                    arg = self.cos_angles[:, None] * cc[None, :] + self.sin_angles[:, None] * cs[None, :]
                else:
                    arg = (cc * self.cos_angles + cs * self.sin_angles)[:, None]
                psi *= half_factors[s]
                theta = self._rotate(self._to_theta, psi)
                theta *= np.exp(-1j * (length * h) * arg)
                psi = self._rotate(self._from_theta, theta)
                psi *= half_factors[s]
            if watch_jumps:
                norms2 = np.einsum("ij,ij->j", psi.conj(), psi).real
                for j in np.flatnonzero(norms2 < trajectory.thresholds):
                    psi[:, j] = self._resolve_jumps(
                        step_start[:, j], t_step, dt, coeff_fn, damping,
                        trajectory, int(j))
        norms2 = np.einsum("ij,ij->j", psi.conj(), psi).real
        if not np.all(np.isfinite(norms2)):
            raise NumericsError("evolution produced non-finite amplitudes")
        return psi, t0 + n_steps * dt

    def _single_step(self, vec: np.ndarray, t_start: float, dt_step: float,
                     coeff_fn, damping: float, column: int) -> np.ndarray:
        """One split step of an isolated column (used by jump bisection)."""
        vec = vec[:, None].copy()
        times = t_start + dt_step * np.asarray(self._offsets)
        c_cos, c_sin = coeff_fn(times)

        def pick(c, s):
            c = np.asarray(c, dtype=float)
            if c.ndim == 2:
                return c[s, column]
            if c.ndim == 1:
                return c[s]
            return float(c)

        h = 2.0 * np.pi * dt_step
        for s, length in enumerate(self._lengths):
            half = np.exp((-1j - 0.5 * damping) * (0.5 * length * h) * self.number)[:, None]
            arg = (pick(c_cos, s) * self.cos_angles + pick(c_sin, s) * self.sin_angles)[:, None]
            vec *= half
            theta = self._rotate(self._to_theta, vec)
            theta *= np.exp(-1j * (length * h) * arg)
            vec = self._rotate(self._from_theta, theta)
            vec *= half
        return vec[:, 0]

    def _resolve_jumps(self, start_vec: np.ndarray, t_step: float, dt: float,
                       coeff_fn, damping: float, trajectory: TrajectoryState,
                       column: int) -> np.ndarray:
        """Locate each loss event in [t_step, t_step + dt] by bisection.

        ``start_vec`` is the column at the beginning of the step whose
        end-of-step norm fell below the threshold. Returns the column at
        the end of the step with all jumps applied at their located times.
        """
        vec = start_vec
        t_lo, t_hi = 0.0, dt
        for _ in range(32):  # cascades per step; generically one
            r = trajectory.thresholds[column]
            if np.vdot(vec, vec).real <= r:
                raise NumericsError("jump-time bisection lost its bracket")
            lo, hi = t_lo, t_hi
            # invariant: norm^2 at t_step+lo > r >= norm^2 at t_step+hi
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                probe = self._single_step(vec, t_step + t_lo, mid - t_lo,
                                          coeff_fn, damping, column)
                if np.vdot(probe, probe).real > r:
                    lo = mid
                else:
                    hi = mid
            at_jump = self._single_step(vec, t_step + t_lo, hi - t_lo,
                                        coeff_fn, damping, column)
            jumped = at_jump[:, None].copy()
            self._apply_jump(jumped, 0)
            vec = jumped[:, 0]
            trajectory.jumps.append(JumpRecord(column=column, time=t_step + hi))
            trajectory.thresholds[column] = trajectory.rngs[column].random()
            t_lo = hi
            vec = self._single_step(vec, t_step + t_lo, dt - t_lo,
                                    coeff_fn, damping, column)
            if np.vdot(vec, vec).real >= trajectory.thresholds[column]:
                return vec
            # another crossing inside the remainder; bisect again from the jump
            vec = jumped[:, 0]
            t_hi = dt
        raise NumericsError("jump cascade did not terminate within one step")

    def _apply_jump(self, psi: np.ndarray, column: int) -> None:
        lowering = np.sqrt(self.number[1:])
        psi[:-1, column] = lowering * psi[1:, column]
        psi[-1, column] = 0.0
        nrm = np.linalg.norm(psi[:, column])
        if nrm == 0.0:
            raise NumericsError("jump from vacuum-supported state; loss model inconsistent")
        psi[:, column] /= nrm
