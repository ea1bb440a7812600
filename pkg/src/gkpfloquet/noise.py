"""Open-system preparation: photon-loss quantum trajectories and
stochastic flux noise.

Loss at rate kappa = omega_0/Q enters through the quantum-jump
unraveling in the split-step engine; the ensemble density matrix is the
uniform mixture of the normalized trajectory states. Flux noise is a
classical stochastic process delta_phi_e(t)/phi_0 with one-sided
spectrum S(f) = A^2 (1 Hz / f) + W^2 between configurable cutoffs,
synthesized spectrally and applied through the first-order expansion of
the SQUID term about the pi working point: the cos-quadrature drive
coefficient acquires -(E_J/hbar) delta_phi_e(t) / (2 phi_0). Each
trajectory draws an independent trace, so flux-only runs are ensemble
averaged as well.

Frequencies inside this module are in cycles per period T. The
amplitudes A and W are quoted per sqrt(Hz) as in experiments, so the
white floor and the 1 Hz reference of the 1/f part are converted with
``frequency_scale`` = omega_0/2pi in Hz; the 1/f contribution itself is
scale free. Seeds derive from ``master_seed`` by SeedSequence spawning,
one child per trajectory index, so an ensemble is bit-identical no
matter how it is partitioned into batches.
"""
from __future__ import annotations

import csv
import dataclasses

import numpy as np

from .errors import TruncationError
from .evolve import SplitStepEngine, TrajectoryState
from .fock import DensityMatrix, FockSpace, StateVector
from .hamiltonians import ModelParams
from .metrics import (
    LogicalState,
    _delta_from_expectation,
    _stabilizer_matrices,
    decoder_for,
)
from .prep import (
    PreparationRun,
    RampSchedule,
    TimelineRecord,
    _ramp_windows,
    _SCHEME_ORDER,
    _target_vector,
    align_to_drive,
    chirped_coefficients,
    ramp_frequency,
)

__all__ = [
    "FluxNoiseConfig",
    "NoiseConfig",
    "FluxNoiseTrace",
    "flux_noise_trace",
    "apply_flux_noise",
    "trajectory_evolve",
    "ensemble_prepare",
    "write_trajectory_csv",
]

# trajectories per engine batch; fixed so results do not depend on how
# much memory-parallelism the host could afford
BATCH_SIZE = 25

# bootstrap resamples for the reported standard errors
_BOOTSTRAP = 400


@dataclasses.dataclass(frozen=True)
class FluxNoiseConfig:
    """Flux-noise spectrum parameters.

    ``amplitude_1f`` and ``white_floor`` are in phi_0/sqrt(Hz) (the 1/f
    amplitude quoted at the 1 Hz reference). Cutoffs are in cycles per
    period T; left unset they default to 1/(10 t_f) and 8 N (twice the
    fastest drive harmonic). ``frequency_scale`` is omega_0/2pi in Hz
    and fixes the physical bandwidth represented by one cycle per T.
    """

    amplitude_1f: float = 5e-6
    white_floor: float = 1e-8
    low_cutoff: float | None = None
    high_cutoff: float | None = None
    frequency_scale: float = 1e9

    def __post_init__(self):
        if self.amplitude_1f < 0 or self.white_floor < 0:
            raise ValueError("noise amplitudes must be nonnegative")
        for name in ("low_cutoff", "high_cutoff"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive when given")
        if not self.frequency_scale > 0:
            raise ValueError("frequency_scale must be positive")

    def resolved_cutoffs(self, duration: float, n_harmonics: int) -> tuple:
        low = self.low_cutoff if self.low_cutoff is not None else 1.0 / (10.0 * duration)
        high = self.high_cutoff if self.high_cutoff is not None else 8.0 * n_harmonics
        if not low < high:
            raise ValueError(
                f"low cutoff {low:.3g} must lie below high cutoff {high:.3g}")
        return float(low), float(high)


@dataclasses.dataclass(frozen=True)
class NoiseConfig:
    """Open-system configuration for a preparation run.

    ``quality_factor`` is Q = omega_0/kappa (None disables loss);
    ``flux_noise`` an optional :class:`FluxNoiseConfig`. The same
    ``master_seed`` reproduces the ensemble bit for bit.
    """

    quality_factor: float | None = None
    flux_noise: FluxNoiseConfig | None = None
    n_trajectories: int = 200
    master_seed: int = 0

    def __post_init__(self):
        if self.quality_factor is not None and not self.quality_factor > 0:
            raise ValueError("quality_factor must be positive when given")
        if self.flux_noise is not None and not isinstance(self.flux_noise, FluxNoiseConfig):
            raise ValueError("flux_noise must be a FluxNoiseConfig")
        if not (isinstance(self.n_trajectories, (int, np.integer)) and self.n_trajectories >= 1):
            raise ValueError("n_trajectories must be an integer >= 1")
        if not (isinstance(self.master_seed, (int, np.integer))
                and 0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit nonnegative integer")

    @property
    def kappa(self) -> float:
        """Loss rate in units of omega_0."""
        return 0.0 if self.quality_factor is None else 1.0 / float(self.quality_factor)

    @property
    def active(self) -> bool:
        return self.quality_factor is not None or self.flux_noise is not None


@dataclasses.dataclass(frozen=True)
class FluxNoiseTrace:
    """One realization delta_phi_e(t_i)/phi_0 on a uniform grid t_i = i dt."""

    samples: np.ndarray
    dt: float
    seed: object

    def value_at(self, times) -> np.ndarray:
        """Linear interpolation onto arbitrary times (clamped at the ends)."""
        pos = np.asarray(times, dtype=float) / self.dt
        idx = np.clip(pos.astype(int), 0, self.samples.size - 2)
        frac = np.clip(pos - idx, 0.0, 1.0)
        return self.samples[idx] * (1.0 - frac) + self.samples[idx + 1] * frac


def flux_noise_trace(noise: FluxNoiseConfig, duration: float, dt: float, seed,
                     n_harmonics: int = 4) -> FluxNoiseTrace:
    """Synthesize one flux-noise realization covering [0, duration].

    Independent complex Gaussian amplitudes are drawn for each Fourier
    bin inside the cutoffs, shaped by the one-sided spectrum
    S(f) = A^2/f + W^2 * frequency_scale (cycles-per-T units), and
    inverse-transformed to a real series. The DC bin is excluded, so the
    trace has exactly zero mean.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    low, high = noise.resolved_cutoffs(duration, n_harmonics)
    nyquist = 0.5 / dt
    if high > nyquist * (1.0 + 1e-12):
        raise ValueError(
            f"high cutoff {high:.3g} exceeds the Nyquist frequency {nyquist:.3g} "
            "of the requested grid")
    n = int(np.ceil(duration / dt)) + 2
    n += n % 2
    freqs = np.fft.rfftfreq(n, dt)
    mask = (freqs >= low) & (freqs <= high)
    psd = noise.amplitude_1f**2 / freqs[mask] + noise.white_floor**2 * noise.frequency_scale
    rng = np.random.default_rng(seed)
    gauss = rng.normal(size=(2, int(mask.sum())))
    df = 1.0 / (n * dt)
    # each interior rfft bin contributes (2|X_k|/n)^2 * Var(g) to the series
    # variance, so |X_k| = (n/2) sqrt(S_k df) reproduces sum S_k df
    spectrum = np.zeros(freqs.size, dtype=complex)
    spectrum[mask] = 0.5 * n * np.sqrt(psd * df) * (gauss[0] + 1j * gauss[1])
    samples = np.fft.irfft(spectrum, n)
    return FluxNoiseTrace(samples=samples, dt=float(dt), seed=seed)


def apply_flux_noise(coeff_fn, trace: FluxNoiseTrace, params: ModelParams):
    """Wrap a drive-coefficient function with one flux-noise realization.

    First order in delta_phi_e about the working point, the SQUID term
    shifts the cos-quadrature coefficient by -(E_J/hbar) delta_phi/(2 phi_0);
    a constant offset delta_phi/phi_0 = 2 eps delta is the same as
    shifting J by (E_J/hbar) eps delta.
    """
    gain = -0.5 * params.ej_over_hbar

    def noisy(times):
        c_cos, c_sin = coeff_fn(times)
        return c_cos + gain * trace.value_at(times), c_sin

    return noisy


def _trajectory_streams(child: np.random.SeedSequence):
    """Jump and flux seeds for one trajectory, derived in a fixed order."""
    jump_ss, flux_ss = child.spawn(2)
    return np.random.default_rng(jump_ss), flux_ss


def _flux_offsets(traces, times, params):
    """(K, B) additions to the cos coefficient for a batch of traces."""
    gain = -0.5 * params.ej_over_hbar
    return gain * np.stack([tr.value_at(times) for tr in traces], axis=1)


class _EnsembleStats:
    """Per-sample ensemble accumulators and per-trajectory finals.

    Expectations are accumulated as sums over trajectory columns in index
    order; everything downstream (squeezing, decoded fidelity, bootstrap)
    derives from these, which keeps the reduction deterministic.
    """

    def __init__(self, space, n_samples, n_trajectories, decoder):
        self.space = space
        self.decoder = decoder
        self.sx, self.sp = _stabilizer_matrices(space.dim)
        self.count = np.zeros(n_samples, dtype=int)
        self.sum_ex = np.zeros(n_samples, dtype=complex)
        self.sum_ep = np.zeros(n_samples, dtype=complex)
        self.sum_bloch = np.zeros((n_samples, 3), dtype=float)
        self.sum_n = np.zeros(n_samples, dtype=float)
        self.final_ex = np.zeros(n_trajectories, dtype=complex)
        self.final_ep = np.zeros(n_trajectories, dtype=complex)
        self.final_bloch = np.zeros((n_trajectories, 3), dtype=float)

    def accumulate(self, sample_idx, cols, col_offset, is_final):
        def batched(op):
            return np.einsum("ij,ij->j", cols.conj(), op @ cols)

        ex, ep = batched(self.sx), batched(self.sp)
        bloch = np.stack([
            batched(self.decoder.bloch_x_op).real,
            batched(self.decoder.bloch_y_op).real,
            batched(self.decoder.bloch_z_op).real,
        ], axis=1)
        self.count[sample_idx] += cols.shape[1]
        self.sum_ex[sample_idx] += ex.sum()
        self.sum_ep[sample_idx] += ep.sum()
        self.sum_bloch[sample_idx] += bloch.sum(axis=0)
        self.sum_n[sample_idx] += float(
            (np.abs(cols) ** 2 * self.space.number_diag[:, None]).sum())
        if is_final:
            sl = slice(col_offset, col_offset + cols.shape[1])
            self.final_ex[sl] = ex
            self.final_ep[sl] = ep
            self.final_bloch[sl] = bloch


def _db_from_mean(values) -> float:
    delta = _delta_from_expectation(complex(np.mean(values)))
    return float("inf") if delta == 0.0 else -10.0 * np.log10(delta * delta)


def _fidelity_from_mean(bloch_rows, target_vec) -> float:
    bx, by, bz = np.mean(np.asarray(bloch_rows), axis=0)
    rho_l = 0.5 * np.array([[1.0 + bz, bx - 1j * by], [bx + 1j * by, 1.0 - bz]])
    return LogicalState(rho_l).fidelity(target_vec)


def ensemble_prepare(initial: StateVector, schedule: RampSchedule,
                     params: ModelParams, cfg, noise: NoiseConfig, *,
                     target: str = "H+", sample_every: float = 10.0) -> PreparationRun:
    """Trajectory-ensemble preparation; the open-system path of prepare().

    Runs ``noise.n_trajectories`` quantum trajectories in fixed batches
    of BATCH_SIZE columns, each with loss rate omega_0/Q and (when
    configured) its own flux-noise realization. Timeline metrics are
    those of the ensemble density matrix; ``final_state`` is the uniform
    mixture of the normalized final trajectory states. Diagnostics carry
    bootstrap standard errors of the final squeezing and fidelity and the
    per-trajectory jump records.
    """
    if not isinstance(noise, NoiseConfig):
        raise ValueError("noise must be a NoiseConfig")
    space = initial.space
    kappa = noise.kappa
    m_traj = noise.n_trajectories
    decoder = decoder_for(space)
    tv = _target_vector(target)
    engine = SplitStepEngine(space, params.eta, order=_SCHEME_ORDER[cfg.scheme])
    base_coeff = chirped_coefficients(schedule, params)

    windows = list(_ramp_windows(schedule, cfg, sample_every))
    sample_times = [0.0] + [w[3] for w in windows]
    stats = _EnsembleStats(space, len(sample_times), m_traj, decoder)
    children = np.random.SeedSequence(noise.master_seed).spawn(m_traj + 1)
    boot_rng = np.random.default_rng(children[m_traj])

    final_cols = np.empty((space.dim, m_traj), dtype=complex)
    jump_log = [[] for _ in range(m_traj)]

    for lo in range(0, m_traj, BATCH_SIZE):
        hi = min(lo + BATCH_SIZE, m_traj)
        jump_rngs, traces = [], []
        for k in range(lo, hi):
            jump_rng, flux_ss = _trajectory_streams(children[k])
            jump_rngs.append(jump_rng)
            if noise.flux_noise is not None:
                traces.append(flux_noise_trace(
                    noise.flux_noise, schedule.t_f, 1.0 / cfg.steps_per_period,
                    flux_ss, params.n_harmonics))
        trajectory = TrajectoryState.start(jump_rngs) if kappa > 0 else None

        if traces:
            def coeff_fn(times, _traces=traces):
                c_cos, c_sin = base_coeff(times)
                c_cos = c_cos[:, None] + _flux_offsets(_traces, times, params)
                return c_cos, np.broadcast_to(
                    np.asarray(c_sin, dtype=float)[:, None], c_cos.shape)
        else:
            coeff_fn = base_coeff

        def measure(sample_idx, t, cols, is_final):
            nrms = np.linalg.norm(cols, axis=0)
            aligned = align_to_drive(space, schedule, t, cols / nrms)
            top = space.dim - max(1, int(np.ceil(0.1 * space.dim)))
            leak = float(np.mean(np.abs(aligned[top:]) ** 2, axis=1).sum())
            if leak > 1e-4:
                raise TruncationError(
                    f"ensemble population {leak:.2e} in the top 10% of Fock "
                    f"levels at t = {t:.1f}; increase the space dimension")
            stats.accumulate(sample_idx, aligned, lo, is_final)
            return aligned

        psi = np.tile(initial.data[:, None], (1, hi - lo)).astype(complex)
        measure(0, 0.0, psi, False)
        for i, (t, dt, n_steps, stop) in enumerate(windows):
            psi, _ = engine.run(psi, t, dt, n_steps, coeff_fn,
                                damping=kappa, trajectory=trajectory)
            aligned = measure(i + 1, stop, psi, stop == schedule.t_f)
        final_cols[:, lo:hi] = aligned
        if trajectory is not None:
            for rec in trajectory.jumps:
                jump_log[lo + rec.column].append(rec.time)

    timeline = [
        TimelineRecord(
            t=t,
            omega=float(ramp_frequency(schedule, min(t, schedule.t_f))),
            db_x=_db_from_mean(stats.sum_ex[i] / stats.count[i]),
            db_p=_db_from_mean(stats.sum_ep[i] / stats.count[i]),
            logical_fidelity=_fidelity_from_mean(
                stats.sum_bloch[i][None, :] / stats.count[i], tv),
            mean_photon_number=float(stats.sum_n[i] / stats.count[i]),
            norm_or_trace=1.0,
        )
        for i, t in enumerate(sample_times)
    ]

    draws = boot_rng.integers(0, m_traj, size=(_BOOTSTRAP, m_traj))
    boot_dbx = [_db_from_mean(stats.final_ex[d]) for d in draws]
    boot_dbp = [_db_from_mean(stats.final_ep[d]) for d in draws]
    boot_fid = [_fidelity_from_mean(stats.final_bloch[d], tv) for d in draws]
    diagnostics = {
        "squeezing_db_x_se": float(np.std(boot_dbx, ddof=1)),
        "squeezing_db_p_se": float(np.std(boot_dbp, ddof=1)),
        "logical_fidelity_se": float(np.std(boot_fid, ddof=1)),
        "jump_times": jump_log,
        "jump_counts": [len(j) for j in jump_log],
        "trajectory_db_x": [_db_from_mean([e]) for e in stats.final_ex],
        "trajectory_db_p": [_db_from_mean([e]) for e in stats.final_ep],
    }

    rho = DensityMatrix.from_states(
        [StateVector(space, final_cols[:, k]) for k in range(m_traj)])
    return PreparationRun(
        initial_state=initial, schedule=schedule, params=params, cfg=cfg,
        noise=noise, target=target, timeline=timeline, final_state=rho,
        diagnostics=diagnostics,
    )


def trajectory_evolve(initial: StateVector, schedule: RampSchedule,
                      params: ModelParams, cfg, noise: NoiseConfig,
                      trajectory_seed) -> StateVector:
    """Evolve a single quantum trajectory; deterministic in trajectory_seed.

    ``trajectory_seed`` may be an integer or a SeedSequence; passing
    child k of SeedSequence(master_seed).spawn(M) reproduces column k of
    the corresponding ensemble. With kappa = 0 and no flux noise the
    result is identical to the noiseless prepare() trajectory.
    """
    if not isinstance(noise, NoiseConfig):
        raise ValueError("noise must be a NoiseConfig")
    space = initial.space
    if not isinstance(trajectory_seed, np.random.SeedSequence):
        trajectory_seed = np.random.SeedSequence(trajectory_seed)
    jump_rng, flux_ss = _trajectory_streams(trajectory_seed)
    engine = SplitStepEngine(space, params.eta, order=_SCHEME_ORDER[cfg.scheme])
    coeff_fn = chirped_coefficients(schedule, params)
    if noise.flux_noise is not None:
        trace = flux_noise_trace(noise.flux_noise, schedule.t_f,
                                 1.0 / cfg.steps_per_period, flux_ss,
                                 params.n_harmonics)
        coeff_fn = apply_flux_noise(coeff_fn, trace, params)
    kappa = noise.kappa
    trajectory = TrajectoryState.start([jump_rng]) if kappa > 0 else None
    psi = np.ascontiguousarray(initial.data[:, None], dtype=complex)
    for t, dt, n_steps, stop in _ramp_windows(schedule, cfg, 10.0):
        psi, _ = engine.run(psi, t, dt, n_steps, coeff_fn,
                            damping=kappa, trajectory=trajectory)
    vec = align_to_drive(space, schedule, schedule.t_f, psi[:, 0])
    return StateVector.from_unnormalized(space, vec)


def write_trajectory_csv(path, run: PreparationRun, preamble: str | None = None) -> None:
    """Per-trajectory diagnostics of an ensemble run as CSV; ``preamble``
    (a comment line, e.g. a config-hash stamp) precedes the header."""
    diag = run.diagnostics
    if "jump_counts" not in diag:
        raise ValueError("run carries no trajectory diagnostics")
    with open(path, "w", newline="") as fh:
        if preamble:
            fh.write(preamble + "\n")
        writer = csv.writer(fh)
        writer.writerow(["trajectory_index", "n_jumps",
                         "final_squeezing_db_x", "final_squeezing_db_p",
                         "jump_times"])
        for k, count in enumerate(diag["jump_counts"]):
            writer.writerow([
                k, count,
                f"{diag['trajectory_db_x'][k]:.6f}",
                f"{diag['trajectory_db_p'][k]:.6f}",
                ";".join(f"{t:.6f}" for t in diag["jump_times"][k]),
            ])
