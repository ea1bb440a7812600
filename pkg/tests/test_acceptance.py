"""End-to-end acceptance suite at production settings.

Pins the headline figures of the driven-oscillator GKP study: the
kicked-map identity, Fourier symmetry of the truncated Hamiltonian, the
Floquet-pair squeezing and logical fidelities, the adiabatic preparation
curves with and without noise, robustness to circuit imperfections, the
decoder oracles, and the open-system sanity checks. Everything runs at
the full D = 250 dimension; the trajectory ensembles dominate the cost,
so expect a couple of hours of single-core time for the whole module.
"""
import dataclasses

import numpy as np
import pytest
from scipy import signal, stats
from scipy.linalg import expm

from gkpfloquet import (
    FluxNoiseConfig,
    FockSpace,
    IntegratorConfig,
    ModelParams,
    NoiseConfig,
    RampSchedule,
    decoder_for,
    floquet_states,
    flux_noise_trace,
    gkp_hamiltonian,
    harmonic_propagator,
    kicked_propagator,
    logical_fidelity,
    prepare,
    prepare_superposition,
    reference_states,
    select_gkp_states,
    truncated_gkp_hamiltonian,
)
from gkpfloquet.floquet import PERIOD

DIM = 250
PARAMS = ModelParams()
FINE = IntegratorConfig(512)
ENSEMBLE_CFG = IntegratorConfig(256, "midpoint-exponential")

# Floquet-pair reference figures of the N = 4, J/omega_0 = 2.5e-3 model;
# the dB band covers truncation uncertainty, the relative fidelity band
# also absorbs the decoder binning convention.
PLUS_DB, MINUS_DB, DB_TOL = 11.9, 11.2, 0.2
PLUS_INFID, MINUS_INFID, INFID_RTOL = 3.7e-3, 5.5e-3, 0.30


@pytest.fixture(scope="module")
def space():
    return FockSpace(DIM)


@pytest.fixture(scope="module")
def floquet_pair(space):
    sol = floquet_states(harmonic_propagator(space, PARAMS, FINE))
    return sol, select_gkp_states(sol)


@pytest.fixture(scope="module")
def prep_curve(space):
    """Noiseless preparation finals over the standard t_f grid."""
    runs = {}
    for t_f in (1000.0, 1500.0, 2000.0, 3000.0):
        runs[t_f] = prepare(space.basis_state(0), RampSchedule(t_f=t_f),
                            PARAMS, cfg=FINE)
    return runs


@pytest.fixture(scope="module")
def lossy_grid(space):
    """Trajectory ensembles over preparation time at two quality factors."""
    out = {}
    for q in (1e6, 1e5):
        for t_f in (1600.0, 1800.0, 2000.0):
            noise = NoiseConfig(quality_factor=q, n_trajectories=200,
                                master_seed=0)
            out[q, t_f] = prepare(space.basis_state(0), RampSchedule(t_f=t_f),
                                  PARAMS, cfg=ENSEMBLE_CFG, noise=noise)
    return out


@pytest.fixture(scope="module")
def flux_comparison(space):
    """Flux-noise ensemble and its noiseless twin on the same integrator."""
    sch = RampSchedule(t_f=2000.0)
    clean = prepare(space.basis_state(0), sch, PARAMS, cfg=ENSEMBLE_CFG)
    noise = NoiseConfig(flux_noise=FluxNoiseConfig(), n_trajectories=200,
                        master_seed=0)
    noisy = prepare(space.basis_state(0), sch, PARAMS, cfg=ENSEMBLE_CFG,
                    noise=noise)
    return clean, noisy


def _pair_figures(params, cfg=None):
    space = FockSpace(DIM)
    cfg = cfg or IntegratorConfig.for_model(params)
    pair = select_gkp_states(floquet_states(harmonic_propagator(space, params, cfg)))
    return pair


class TestStroboscopicModel:
    def test_kick_train_realizes_gkp_evolution(self, space):
        # one period of the resonant kick train equals exp(-i T H_GKP)
        # exactly; the truncated tail only contaminates the upper half
        u_kick = kicked_propagator(space, PARAMS)
        u_gkp = expm(-1j * PERIOD * gkp_hamiltonian(space, PARAMS))
        delta = np.linalg.norm((u_kick - u_gkp)[: DIM // 2, : DIM // 2], 2)
        assert delta < 1e-6

    def test_truncated_hamiltonian_commutes_with_quarter_rotation(self, space):
        phases = np.exp(0.5j * np.pi * space.number_diag)
        for n in range(1, 7):
            h = truncated_gkp_hamiltonian(
                space, dataclasses.replace(PARAMS, n_harmonics=n))
            comm = h * phases[None, :] - phases[:, None] * h
            assert np.linalg.norm(comm, 2) < 1e-12


class TestFloquetPair:
    def test_pair_figures_of_merit(self, floquet_pair):
        _, pair = floquet_pair
        for rep, db in ((pair.squeezing_plus, PLUS_DB),
                        (pair.squeezing_minus, MINUS_DB)):
            assert rep.db_x == pytest.approx(db, abs=DB_TOL)
            assert rep.db_p == pytest.approx(db, abs=DB_TOL)
        assert 1.0 - pair.fidelity_plus == pytest.approx(PLUS_INFID, rel=INFID_RTOL)
        assert 1.0 - pair.fidelity_minus == pytest.approx(MINUS_INFID, rel=INFID_RTOL)

    def test_pair_squeezing_monotone_in_drive_harmonics(self, floquet_pair):
        values = []
        for n in (1, 2, 3):
            pair = _pair_figures(dataclasses.replace(PARAMS, n_harmonics=n))
            values.append(min(pair.squeezing_plus.db_x, pair.squeezing_plus.db_p))
        _, pair4 = floquet_pair
        values.append(min(pair4.squeezing_plus.db_x, pair4.squeezing_plus.db_p))
        assert np.all(np.diff(values) > 0.0)


class TestNoiselessPreparation:
    def test_squeezing_rises_then_plateaus(self, prep_curve, floquet_pair):
        _, pair = floquet_pair
        db = {t: run.timeline[-1].db_x for t, run in prep_curve.items()}
        fid = {t: run.timeline[-1].logical_fidelity for t, run in prep_curve.items()}
        grid = sorted(db)
        # monotone rise, then a genuine plateau: the first 1000 periods
        # gain over a dB, the last 1000 well under the plateau band
        assert all(db[a] < db[b] for a, b in zip(grid, grid[1:]))
        assert db[2000.0] - db[1000.0] >= 1.0
        for t_f in (2000.0, 3000.0):
            run = prep_curve[t_f]
            rec = run.timeline[-1]
            assert rec.db_x == pytest.approx(pair.squeezing_plus.db_x, abs=0.3)
            assert rec.db_p == pytest.approx(pair.squeezing_plus.db_p, abs=0.3)
            assert fid[t_f] == pytest.approx(pair.fidelity_plus, abs=2e-3)

    def test_preparation_reaches_floquet_squeezing(self, prep_curve, floquet_pair):
        _, pair = floquet_pair
        best = max(rec.db_x for rec in prep_curve[3000.0].timeline)
        assert best >= pair.squeezing_plus.db_x - 0.05

    def test_prepared_state_keeps_fock_mod4_structure(self, prep_curve):
        psi = np.abs(prep_curve[2000.0].final_state.data) ** 2
        assert psi[1::2].sum() < 1e-12
        assert psi[2::4].sum() < 2e-6

    def test_superposition_weights_survive_the_ramp(self, floquet_pair):
        # alpha |0> + beta |2> flows to alpha |psi_+> + e^{i phi} beta |psi_->
        sol, pair = floquet_pair
        alpha, beta = np.sqrt(0.7), np.sqrt(0.3)
        out = prepare_superposition(
            alpha, beta, RampSchedule(t_f=2000.0), PARAMS, FINE,
            pair_states=(sol.states[:, pair.index_plus],
                         sol.states[:, pair.index_minus]))
        assert out.overlap_plus == pytest.approx(0.7, abs=1e-2)
        assert out.overlap_minus == pytest.approx(0.3, abs=1e-2)
        assert np.isfinite(out.phase)


class TestLossyPreparation:
    def test_quality_factor_1e6_figures(self, lossy_grid):
        finals = [run.timeline[-1] for (q, _), run in lossy_grid.items() if q == 1e6]
        best_db = max(min(r.db_x, r.db_p) for r in finals)
        min_infid = min(1.0 - r.logical_fidelity for r in finals)
        assert best_db == pytest.approx(12.0, abs=0.3)
        assert min_infid == pytest.approx(3.2e-3, rel=0.5)

    def test_quality_factor_1e5_figures(self, lossy_grid):
        finals = [run.timeline[-1] for (q, _), run in lossy_grid.items() if q == 1e5]
        best_db = max(min(r.db_x, r.db_p) for r in finals)
        min_infid = min(1.0 - r.logical_fidelity for r in finals)
        assert best_db == pytest.approx(11.0, abs=0.3)
        assert min_infid == pytest.approx(1.3e-2, rel=0.3)

    def test_ensembles_actually_jump(self, lossy_grid):
        for (q, _), run in lossy_grid.items():
            jumps = sum(run.diagnostics["jump_counts"])
            assert jumps > 0 or q == 1e6

    def test_flux_noise_degrades_weakly(self, flux_comparison):
        clean, noisy = flux_comparison
        c, n = clean.timeline[-1], noisy.timeline[-1]
        assert c.db_x - n.db_x < 0.05
        assert c.db_p - n.db_p < 0.05
        assert c.logical_fidelity - n.logical_fidelity < 2e-3


class TestRobustness:
    def test_impedance_and_asymmetry_endpoints(self, floquet_pair):
        _, base = floquet_pair
        base_db = min(base.squeezing_plus.db_x, base.squeezing_plus.db_p)
        endpoints = [
            dataclasses.replace(PARAMS, impedance_ratio=0.95),
            dataclasses.replace(PARAMS, impedance_ratio=1.05),
            dataclasses.replace(PARAMS, ej_asymmetry=-0.05),
            dataclasses.replace(PARAMS, ej_asymmetry=+0.05),
        ]
        for params in endpoints:
            pair = _pair_figures(params, FINE)
            db = min(pair.squeezing_plus.db_x, pair.squeezing_plus.db_p)
            assert base_db - db <= 0.7
            assert base.fidelity_plus - pair.fidelity_plus <= 4e-3


class TestDecoderOracles:
    def test_ideal_comb_decodes_to_logical_zero(self, space):
        comb = reference_states.logical_state(space, 0, beta=0.0)
        rho_l = decoder_for(space).decode(comb).rho_l
        assert rho_l[0, 0].real > 0.999

    def test_decode_is_linear(self, space):
        dec = decoder_for(space)
        rng = np.random.default_rng(41)
        for _ in range(5):
            v = np.zeros((DIM, 2), dtype=complex)
            v[:30] = rng.normal(size=(30, 2)) + 1j * rng.normal(size=(30, 2))
            v /= np.linalg.norm(v, axis=0)
            mix = 0.4 * np.outer(v[:, 0], v[:, 0].conj()) \
                + 0.6 * np.outer(v[:, 1], v[:, 1].conj())
            split = 0.4 * dec.decode(v[:, 0]).rho_l + 0.6 * dec.decode(v[:, 1]).rho_l
            assert np.max(np.abs(dec.decode(mix).rho_l - split)) < 1e-6

    def test_quarter_rotation_acts_as_hadamard(self, space):
        dec = decoder_for(space)
        hadamard = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        phases = np.exp(0.5j * np.pi * np.arange(DIM))
        rng = np.random.default_rng(42)
        for _ in range(5):
            vec = np.zeros(DIM, dtype=complex)
            vec[:30] = rng.normal(size=30) + 1j * rng.normal(size=30)
            vec /= np.linalg.norm(vec)
            rotated = dec.decode(phases * vec).rho_l
            conjugated = hadamard @ dec.decode(vec).rho_l @ hadamard
            assert np.max(np.abs(rotated - conjugated)) < 1e-6

    def test_finite_energy_magic_states_converge(self, space):
        fids = [logical_fidelity(reference_states.magic_state(space, beta), "H+")
                for beta in (0.4, 0.2, 0.1, 0.05, 0.02)]
        assert np.all(np.diff(fids) > 0.0)
        assert fids[-1] > 0.999


class TestOpenSystemSanity:
    def test_coherent_state_photon_decay(self):
        # every trajectory of a decaying coherent state is the same
        # coherent state, so the M = 500 ensemble mean lands on
        # |alpha|^2 e^(-kappa t) far inside three standard errors
        space = FockSpace(40)
        params = ModelParams(j_over_omega0=1e-15, epsilon=1e-15)
        kappa, t_f = 0.02, 20.0
        run = prepare(
            space.coherent_state(2.0), RampSchedule(t_f=t_f), params,
            cfg=ENSEMBLE_CFG,
            noise=NoiseConfig(quality_factor=1.0 / kappa, n_trajectories=500,
                              master_seed=0))
        expected = 4.0 * np.exp(-2.0 * np.pi * kappa * t_f)
        measured = run.final_state.mean_photon_number()
        assert measured == pytest.approx(expected, abs=1e-6)
        assert sum(run.diagnostics["jump_counts"]) > 0

    def test_flux_periodogram_slopes(self):
        white = FluxNoiseConfig(amplitude_1f=0.0, white_floor=1e-8)
        pink = FluxNoiseConfig(amplitude_1f=5e-6, white_floor=0.0)
        tr_w = flux_noise_trace(white, 2000.0, 1.0 / 64, 3)
        tr_p = flux_noise_trace(pink, 2000.0, 1.0 / 64, 5)
        f, p = signal.periodogram(tr_w.samples, fs=64.0)
        band = (f > 2e-3) & (f < 30.0)
        slope_w = stats.linregress(np.log(f[band]), np.log(p[band])).slope
        f, p = signal.periodogram(tr_p.samples, fs=64.0)
        band = (f > 1e-2) & (f < 1.0)
        slope_p = stats.linregress(np.log(f[band]), np.log(p[band])).slope
        assert slope_w == pytest.approx(0.0, abs=0.1)
        assert slope_p == pytest.approx(-1.0, abs=0.1)
