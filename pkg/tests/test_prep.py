"""Chirped-ramp schedules, frame alignment, and the preparation driver."""
import numpy as np
import pytest
from scipy.integrate import quad

from gkpfloquet import FockSpace
from gkpfloquet.errors import IntegratorError, TruncationError
from gkpfloquet.evolve import SplitStepEngine
from gkpfloquet.floquet import CONVERGENCE_TOL, IntegratorConfig
from gkpfloquet.hamiltonians import DriveFunction, ModelParams, drive_coefficients, drive_value
from gkpfloquet.prep import (
    DEFAULT_CENTER,
    DEFAULT_SLOPE,
    OMEGA_INITIAL,
    RampSchedule,
    align_to_drive,
    chirped_coefficients,
    chirped_drive_value,
    drive_phase,
    phase_integral,
    prepare,
    prepare_superposition,
    ramp_frequency,
    write_timeline_csv,
)

CHEAP = IntegratorConfig(256, "midpoint-exponential")


class TestSchedule:
    def test_defaults(self):
        sch = RampSchedule(t_f=2000.0)
        assert sch.omega_initial == 1.0 - np.pi * 1e-2
        assert sch.slope == DEFAULT_SLOPE == 22.0
        assert sch.center == DEFAULT_CENTER == 0.6
        assert OMEGA_INITIAL < 1.0

    @pytest.mark.parametrize("kwargs", [
        {"t_f": 0.0},
        {"t_f": -5.0},
        {"t_f": 100.0, "omega_initial": 0.0},
        {"t_f": 100.0, "slope": -1.0},
        {"t_f": 100.0, "center": 0.0},
        {"t_f": 100.0, "center": 1.0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            RampSchedule(**kwargs)


class TestRampFrequency:
    def test_endpoints_exact(self):
        sch = RampSchedule(t_f=137.0)
        assert ramp_frequency(sch, 0.0) == sch.omega_initial
        assert ramp_frequency(sch, sch.t_f) == 1.0

    def test_midpoint_for_symmetric_center(self):
        sch = RampSchedule(t_f=80.0, center=0.5)
        mid = ramp_frequency(sch, 40.0)
        assert mid == pytest.approx((1.0 + sch.omega_initial) / 2.0, rel=1e-14)

    def test_monotone_approach_to_resonance(self):
        sch = RampSchedule(t_f=100.0)
        omega = ramp_frequency(sch, np.linspace(0.0, 100.0, 400))
        assert np.all(np.diff(omega) > 0.0)
        assert np.all(np.diff(np.abs(omega - 1.0)) < 0.0)

    def test_domain(self):
        sch = RampSchedule(t_f=10.0)
        with pytest.raises(ValueError):
            ramp_frequency(sch, -0.1)
        with pytest.raises(ValueError):
            ramp_frequency(sch, 10.1)

    def test_scalar_and_array(self):
        sch = RampSchedule(t_f=10.0)
        assert isinstance(ramp_frequency(sch, 5.0), float)
        assert ramp_frequency(sch, np.array([1.0, 2.0])).shape == (2,)


class TestPhaseIntegral:
    def test_zero_at_origin(self):
        assert phase_integral(RampSchedule(t_f=100.0), 0.0) == 0.0

    @pytest.mark.parametrize("t", [13.0, 40.0, 57.3, 99.0])
    def test_against_quadrature(self, t):
        sch = RampSchedule(t_f=100.0)
        ref, err = quad(lambda u: ramp_frequency(sch, u), 0.0, t,
                        epsabs=1e-13, epsrel=1e-13, limit=500)
        assert err < 1e-11
        assert phase_integral(sch, t) == pytest.approx(ref, abs=1e-10)

    def test_linear_continuation_past_tf(self):
        sch = RampSchedule(t_f=100.0)
        base = phase_integral(sch, 100.0)
        assert phase_integral(sch, 150.0) == pytest.approx(base + 50.0, abs=1e-12)

    def test_derivative_matches_frequency(self):
        sch = RampSchedule(t_f=100.0)
        t = np.linspace(1.0, 99.0, 17)
        h = 1e-4
        deriv = (phase_integral(sch, t + h) - phase_integral(sch, t - h)) / (2 * h)
        np.testing.assert_allclose(deriv, ramp_frequency(sch, t), atol=1e-8)

    def test_domain(self):
        with pytest.raises(ValueError):
            phase_integral(RampSchedule(t_f=10.0), -1.0)


class TestDrivePhase:
    def test_zeroth_harmonic(self):
        assert drive_phase(RampSchedule(t_f=10.0), 4.2, 0) == 0.0

    def test_index_validation(self):
        sch = RampSchedule(t_f=10.0)
        with pytest.raises(ValueError):
            drive_phase(sch, 1.0, -1)
        with pytest.raises(ValueError):
            drive_phase(sch, 1.0, 1.5)

    def test_resonant_start_recovers_static_phase(self):
        # omega_initial = 1 makes the chirp a no-op: theta_n = 8 pi n t
        sch = RampSchedule(t_f=10.0, omega_initial=1.0)
        for n in (1, 2, 3):
            assert drive_phase(sch, 3.7, n) == 8.0 * np.pi * n * 3.7

    def test_static_drive_value(self):
        sch = RampSchedule(t_f=10.0)
        assert chirped_drive_value(sch, 4, 0.0) == 18.0
        assert chirped_drive_value(sch, 2, 0.0) == 10.0

    def test_resonant_start_coefficients_match_static(self):
        params = ModelParams()
        sch = RampSchedule(t_f=10.0, omega_initial=1.0)
        times = np.linspace(0.0, 8.0, 23)
        drive = DriveFunction("harmonic", params.n_harmonics)
        ref = drive_coefficients(params, drive_value(drive, times))
        out = chirped_coefficients(sch, params)(times)
        np.testing.assert_array_equal(out[0], ref[0])
        np.testing.assert_array_equal(out[1], ref[1])


class TestAlignToDrive:
    def test_free_evolution_restored(self):
        # with omega_initial = 1 the aligned frame undoes free rotation
        # exactly: e^{+2 pi i n frac} e^{-2 pi i n t} = 1 for integer t part
        space = FockSpace(40)
        sch = RampSchedule(t_f=10.0, omega_initial=1.0)
        rng = np.random.default_rng(5)
        psi = rng.normal(size=40) + 1j * rng.normal(size=40)
        psi /= np.linalg.norm(psi)
        engine = SplitStepEngine(space, 1.0, order=2)
        zeros = lambda t: (np.zeros(t.size), np.zeros(t.size))
        out, _ = engine.run(psi[:, None], 0.0, 1.0 / 256, 896, zeros)  # t = 3.5
        aligned = align_to_drive(space, sch, 3.5, out[:, 0])
        np.testing.assert_allclose(aligned, psi, atol=1e-10)

    def test_batch_matches_columns(self):
        space = FockSpace(30)
        sch = RampSchedule(t_f=100.0)
        rng = np.random.default_rng(8)
        block = rng.normal(size=(30, 3)) + 1j * rng.normal(size=(30, 3))
        whole = align_to_drive(space, sch, 37.2, block)
        for k in range(3):
            np.testing.assert_array_equal(
                whole[:, k], align_to_drive(space, sch, 37.2, block[:, k]))

    def test_unitary(self):
        space = FockSpace(30)
        sch = RampSchedule(t_f=100.0)
        vec = np.ones(30) / np.sqrt(30.0)
        assert np.linalg.norm(align_to_drive(space, sch, 41.0, vec)) == pytest.approx(1.0, abs=1e-13)


@pytest.fixture(scope="module")
def short_run():
    space = FockSpace(100)
    run = prepare(space.basis_state(0), RampSchedule(t_f=50.0), ModelParams(),
                  cfg=CHEAP)
    return space, run


class TestPrepare:
    def test_timeline_cadence(self, short_run):
        _, run = short_run
        assert [r.t for r in run.timeline] == [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]

    def test_timeline_cadence_uneven(self):
        space = FockSpace(100)
        run = prepare(space.basis_state(0), RampSchedule(t_f=50.0), ModelParams(),
                      cfg=CHEAP, sample_every=7.0)
        assert [r.t for r in run.timeline] == [0.0, 7.0, 14.0, 21.0, 28.0, 35.0, 42.0, 49.0, 50.0]

    def test_omega_column_endpoints(self, short_run):
        _, run = short_run
        assert run.timeline[0].omega == OMEGA_INITIAL
        assert run.timeline[-1].omega == 1.0

    def test_vacuum_starts_at_zero_db(self, short_run):
        _, run = short_run
        assert run.timeline[0].db_x == pytest.approx(0.0, abs=1e-12)
        assert run.timeline[0].db_p == pytest.approx(0.0, abs=1e-12)
        assert run.timeline[0].mean_photon_number == pytest.approx(0.0, abs=1e-12)

    def test_norm_preserved(self, short_run):
        _, run = short_run
        for rec in run.timeline:
            assert rec.norm_or_trace == pytest.approx(1.0, abs=1e-10)

    def test_final_state_unit_and_excited(self, short_run):
        _, run = short_run
        psi = run.final_state.data
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)
        assert run.timeline[-1].mean_photon_number > run.timeline[0].mean_photon_number

    def test_even_parity_exact(self, short_run):
        # cos(theta) only couples equal parities, so odd Fock amplitudes
        # never develop from |0>
        _, run = short_run
        assert np.max(np.abs(run.final_state.data[1::2])) < 1e-12

    def test_run_metadata(self, short_run):
        _, run = short_run
        assert run.noise is None
        assert run.target == "H+"
        assert run.cfg is CHEAP

    def test_argument_validation(self):
        space = FockSpace(50)
        params = ModelParams()
        sch = RampSchedule(t_f=10.0)
        with pytest.raises(ValueError):
            prepare(space.basis_state(0).data, sch, params, cfg=CHEAP)
        with pytest.raises(ValueError):
            prepare(space.basis_state(0), sch, params, cfg=CHEAP, target="H")
        with pytest.raises(ValueError):
            prepare(space.basis_state(0), sch, params, cfg=CHEAP, sample_every=0.0)
        with pytest.raises(ValueError):
            prepare(space.basis_state(0), sch, params, cfg=CHEAP, sample_every=12.0)
        with pytest.raises(ValueError):
            prepare(space.basis_state(0), sch, params,
                    cfg=IntegratorConfig(128, "midpoint-exponential"))

    def test_truncation_guard(self):
        space = FockSpace(30)
        with pytest.raises(TruncationError):
            prepare(space.basis_state(0), RampSchedule(t_f=100.0), ModelParams(),
                    cfg=CHEAP)

    def test_vacuum_inert_without_coupling(self):
        space = FockSpace(20)
        params = ModelParams(j_over_omega0=1e-15, epsilon=1e-15)
        run = prepare(space.basis_state(0), RampSchedule(t_f=20.0), params,
                      cfg=CHEAP)
        assert abs(run.final_state.data[0]) > 1.0 - 1e-9

    def test_convergence_check_promotes_cfg(self):
        space = FockSpace(100)
        run = prepare(space.basis_state(0), RampSchedule(t_f=20.0), ModelParams(),
                      cfg=IntegratorConfig(512), convergence_check=True)
        dist = run.diagnostics["convergence_distances"]
        assert list(dist) == ["512->1024"]
        assert dist["512->1024"] < CONVERGENCE_TOL * 20.0
        assert run.cfg.steps_per_period == 1024

    def test_convergence_check_raises_when_unconverged(self, monkeypatch):
        monkeypatch.setattr("gkpfloquet.prep.CONVERGENCE_TOL", 1e-15)
        space = FockSpace(60)
        with pytest.raises(IntegratorError) as exc:
            prepare(space.basis_state(0), RampSchedule(t_f=2.0), ModelParams(),
                    cfg=CHEAP, convergence_check=True)
        assert len(exc.value.diagnostics["distances"]) == 2

    def test_timeline_csv_roundtrip(self, short_run, tmp_path):
        _, run = short_run
        path = tmp_path / "timeline.csv"
        write_timeline_csv(path, run)
        header = path.read_text().splitlines()[0]
        assert header.split(",") == [
            "t_over_T", "omega_over_omega0", "squeezing_dB_x", "squeezing_dB_p",
            "logical_fidelity", "mean_photon_number", "norm_or_trace"]
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (6, 7)
        np.testing.assert_allclose(data[:, 0], [r.t for r in run.timeline])
        np.testing.assert_allclose(
            data[:, 4], [r.logical_fidelity for r in run.timeline], atol=1e-10)


class TestSuperposition:
    def test_amplitude_validation(self):
        with pytest.raises(ValueError):
            prepare_superposition(1.0, 1.0, RampSchedule(t_f=10.0), ModelParams())

    def test_pure_plus_reduces_to_prepare(self):
        # injected pair states keep this cheap; (1, 0) must reproduce the
        # plain |0> ramp and report no relative phase
        space = FockSpace(100)
        params = ModelParams()
        sch = RampSchedule(t_f=50.0)
        ref = prepare(space.basis_state(0), sch, params, cfg=CHEAP)
        fake_pair = (space.basis_state(0).data, space.basis_state(2).data)
        out = prepare_superposition(1.0, 0.0, sch, params, CHEAP,
                                    pair_states=fake_pair)
        np.testing.assert_allclose(out.run.final_state.data, ref.final_state.data,
                                   atol=1e-12)
        assert np.isnan(out.phase)
        assert out.overlap_plus == pytest.approx(
            abs(ref.final_state.data[0]) ** 2, abs=1e-12)
        assert out.bloch.shape == (3,)
