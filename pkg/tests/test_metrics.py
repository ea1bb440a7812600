"""Stabilizer expectations, squeezing, decoder and Wigner metrics."""
import numpy as np
import pytest
from scipy.linalg import expm

from gkpfloquet import (
    DecoderError,
    DensityMatrix,
    FockSpace,
    GkpDecoder,
    LogicalState,
    NumericsError,
    SqueezingUndefinedError,
    StateVector,
    decode,
    decoder_for,
    logical_fidelity,
    marginals,
    position_wavefunction,
    reference_states,
    squeezing,
    stabilizer_expectation,
    wigner,
)
from gkpfloquet.fock import displacement
from gkpfloquet.metrics import HADAMARD_MINUS, HADAMARD_PLUS, write_marginals_csv, write_wigner_csv

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def squeezed_vacuum(space, r):
    # independent oracle: exponentiate the squeezing generator directly
    a = space.annihilation
    vec = expm(0.5 * r * (a @ a - a.T @ a.T)) @ space.basis_state(0).data
    return StateVector(space, vec / np.linalg.norm(vec))


def random_low_level_state(space, rng, levels=30):
    c = np.zeros(space.dim, dtype=complex)
    c[:levels] = rng.normal(size=levels) + 1j * rng.normal(size=levels)
    return c / np.linalg.norm(c)


class TestStabilizerExpectation:
    def test_vacuum_both_generators(self):
        space = FockSpace(250)
        vac = space.basis_state(0)
        for gen in ("x-type", "p-type"):
            val = stabilizer_expectation(vac, gen)
            assert abs(val - np.exp(-np.pi)) < 1e-12

    def test_squeezed_vacuum_characteristic_value(self):
        space = FockSpace(250)
        state = squeezed_vacuum(space, 0.5)
        val = stabilizer_expectation(state, "x-type")
        assert abs(val - np.exp(-np.pi * np.exp(-1.0))) < 1e-8
        val_p = stabilizer_expectation(state, "p-type")
        assert abs(val_p - np.exp(-np.pi * np.exp(1.0))) < 1e-8

    def test_approaches_one_with_squeezing(self):
        space = FockSpace(250)
        for r in (0.0, 0.5, 1.0, 1.5):
            val = abs(stabilizer_expectation(squeezed_vacuum(space, r), "x-type"))
            assert abs(val - np.exp(-np.pi * np.exp(-2.0 * r))) < 1e-6

    def test_unknown_generator(self):
        space = FockSpace(20)
        with pytest.raises(ValueError):
            stabilizer_expectation(space.basis_state(0), "y-type")


class TestSqueezing:
    def test_vacuum_is_zero_db(self):
        rep = squeezing(FockSpace(200).basis_state(0))
        assert abs(rep.delta_x - 1.0) < 1e-12
        assert abs(rep.delta_p - 1.0) < 1e-12
        assert abs(rep.db_x) < 1e-10
        assert abs(rep.db_p) < 1e-10

    def test_squeezed_vacuum_closed_form(self):
        rep = squeezing(squeezed_vacuum(FockSpace(250), 0.5))
        assert abs(rep.delta_x - np.exp(-0.5)) < 1e-9
        assert abs(rep.db_x - 10.0 / np.log(10.0)) < 1e-7
        assert abs(rep.delta_p - np.exp(0.5)) < 1e-9

    def test_rotation_swaps_generators_exactly(self):
        space = FockSpace(120)
        rng = np.random.default_rng(3)
        vec = random_low_level_state(space, rng)
        rep = squeezing(vec)
        rot = np.exp(0.5j * np.pi * np.arange(space.dim)) * vec
        rep_rot = squeezing(rot)
        assert abs(rep_rot.delta_x - rep.delta_p) < 1e-12
        assert abs(rep_rot.delta_p - rep.delta_x) < 1e-12

    def test_vanishing_expectation_is_undefined(self):
        with pytest.raises(SqueezingUndefinedError):
            squeezing(np.zeros((8, 8)))

    def test_superunitary_expectation_rejected(self):
        rho = np.zeros((30, 30), dtype=complex)
        rho[0, 0] = 30.0  # deliberately unnormalized
        with pytest.raises(NumericsError):
            squeezing(rho)


class TestDecoder:
    def test_comb_decodes_to_logical_zero(self):
        space = FockSpace(250)
        state = reference_states.logical_state(space, 0, beta=0.05)
        rho_l = decode(state).rho_l
        assert rho_l[0, 0].real > 0.999
        assert abs(rho_l[0, 1]) < 1e-3

    def test_comb_decodes_to_logical_one(self):
        space = FockSpace(250)
        state = reference_states.logical_state(space, 1, beta=0.05)
        assert decode(state).rho_l[1, 1].real > 0.999

    def test_plus_comb_has_full_coherence(self):
        space = FockSpace(250)
        c0 = reference_states.comb_coefficients(space, 0, 0.05)
        c1 = reference_states.comb_coefficients(space, 1, 0.05)
        plus = StateVector.from_unnormalized(
            space, c0 / np.linalg.norm(c0) + c1 / np.linalg.norm(c1)
        )
        rho_l = decode(plus).rho_l
        assert abs(rho_l[0, 1].real - 0.5) < 1e-3
        assert abs(rho_l[0, 1].imag) < 1e-6

    def test_magic_state_fidelity_monotone(self):
        space = FockSpace(250)
        fids = [
            logical_fidelity(reference_states.magic_state(space, beta), "H+")
            for beta in (0.4, 0.2, 0.1, 0.05)
        ]
        assert np.all(np.diff(fids) > 0)
        assert fids[-1] > 0.9999

    def test_hadamard_minus_target(self):
        space = FockSpace(250)
        minus = reference_states.magic_state(space, 0.1, sign=-1)
        assert logical_fidelity(minus, "H-") > 0.999
        assert logical_fidelity(minus, "H+") < 1e-3

    def test_linearity(self):
        space = FockSpace(60)
        dec = decoder_for(space)
        rng = np.random.default_rng(11)
        v1 = random_low_level_state(space, rng)
        v2 = random_low_level_state(space, rng)
        rho1 = np.outer(v1, v1.conj())
        rho2 = np.outer(v2, v2.conj())
        lam = 0.3
        mixed = dec.decode(lam * rho1 + (1 - lam) * rho2).rho_l
        split = lam * dec.decode(rho1).rho_l + (1 - lam) * dec.decode(rho2).rho_l
        assert np.max(np.abs(mixed - split)) < 1e-10

    def test_rotation_hadamard_intertwining(self):
        space = FockSpace(60)
        dec = decoder_for(space)
        rng = np.random.default_rng(12)
        phases = np.exp(0.5j * np.pi * np.arange(space.dim))
        for _ in range(10):
            vec = random_low_level_state(space, rng)
            rotated = dec.decode(phases * vec).rho_l
            conjugated = HADAMARD @ dec.decode(vec).rho_l @ HADAMARD
            assert np.max(np.abs(rotated - conjugated)) < 1e-10

    def test_maximally_mixed_is_half(self):
        space = FockSpace(250)
        rho = np.eye(space.dim) / space.dim
        # truncation leaves an O(1/D) Bloch remnant, gone as the space grows
        assert abs(decode(rho).fidelity(HADAMARD_PLUS) - 0.5) < 0.01

    def test_discretization_doubling_converges(self):
        space = FockSpace(60)
        rng = np.random.default_rng(13)
        vec = random_low_level_state(space, rng)
        coarse = GkpDecoder(space).decode(vec).rho_l
        fine = GkpDecoder(space, u_points=128, envelope_threshold=1e-16).decode(vec).rho_l
        assert np.max(np.abs(coarse - fine)) < 1e-12

    def test_physical_states_stay_in_bloch_ball(self):
        # adversarial maximizer of <Bz + Bx>: the binned measurements behave
        # like a spin triple, max eigenvalue sqrt(2) and Bloch norm <= 1
        space = FockSpace(120)
        dec = decoder_for(space)
        evals, evecs = np.linalg.eigh(dec.bloch_z_op + dec.bloch_x_op)
        assert abs(evals[-1] - np.sqrt(2.0)) < 1e-4
        rho_l = dec.decode(evecs[:, -1].astype(complex)).rho_l
        assert np.linalg.eigvalsh(rho_l)[0] > -1e-8

    def test_inconsistent_input_raises(self):
        space = FockSpace(60)
        dec = decoder_for(space)
        rho = np.zeros((60, 60), dtype=complex)
        rho[0, 0] = 1.0
        rho[0, 2] = 40.0  # grossly non-Hermitian
        with pytest.raises(DecoderError):
            dec.decode(rho)

    def test_dimension_mismatch(self):
        dec = decoder_for(FockSpace(60))
        with pytest.raises(ValueError):
            dec.decode(FockSpace(40).basis_state(0))

    def test_logical_state_validation(self):
        with pytest.raises(ValueError):
            LogicalState(np.array([[0.6, 0.0], [0.0, 0.6]]))
        with pytest.raises(ValueError):
            LogicalState(np.array([[0.5, 0.3], [0.0, 0.5]]))

    def test_logical_fidelity_target_validation(self):
        with pytest.raises(ValueError):
            logical_fidelity(FockSpace(30).basis_state(0), "T")


class TestWigner:
    def test_vacuum_gaussian(self):
        space = FockSpace(60)
        x = np.linspace(-4.0, 4.0, 81)
        p = np.linspace(-4.0, 4.0, 81)
        w = wigner(space.basis_state(0), x, p)
        exact = np.exp(-x[:, None] ** 2 - p[None, :] ** 2) / np.pi
        assert np.max(np.abs(w - exact)) < 1e-12
        assert w.min() > 0

    def test_fock_one_negativity(self):
        space = FockSpace(60)
        w = wigner(space.basis_state(1), np.array([0.0]), np.array([0.0]))
        assert abs(w[0, 0] + 1.0 / np.pi) < 1e-12

    def test_normalization(self):
        space = FockSpace(120)
        state = reference_states.magic_state(space, 0.2)
        x = np.linspace(-9.0, 9.0, 241)
        w = wigner(state, x, x)
        dx = x[1] - x[0]
        assert abs(w.sum() * dx * dx - 1.0) < 1e-4

    def test_matches_literal_displaced_parity(self):
        space = FockSpace(120)
        state = reference_states.magic_state(space, 0.2)
        parity = np.diag((-1.0) ** np.arange(space.dim))
        for xx, pp in [(0.3, -0.8), (1.2, 0.4), (-2.0, 1.1)]:
            alpha = (xx + 1j * pp) / np.sqrt(2.0)
            d2 = displacement(space, 2.0 * alpha)
            literal = np.real(np.vdot(state.data, d2 @ parity @ state.data)) / np.pi
            val = wigner(state, np.array([xx]), np.array([pp]))[0, 0]
            assert abs(val - literal) < 1e-10

    def test_grid_state_structure(self):
        space = FockSpace(120)
        state = reference_states.magic_state(space, 0.2)
        x = np.linspace(-5.0, 5.0, 201)
        w = wigner(state, x, x)
        assert w.min() < -0.01  # interference fringes
        center = w[100, 100]
        lattice = w[100 + int(round(2.0 * np.sqrt(np.pi) / 0.05)), 100]
        assert center > 0.1 and lattice > 0.01

    def test_density_matrix_mixture(self):
        space = FockSpace(60)
        s1 = space.basis_state(0)
        s2 = space.basis_state(3)
        dm = DensityMatrix.from_states([s1, s2], [0.75, 0.25])
        x = np.linspace(-3.0, 3.0, 41)
        w_mix = wigner(dm, x, x)
        w_sum = 0.75 * wigner(s1, x, x) + 0.25 * wigner(s2, x, x)
        assert np.max(np.abs(w_mix - w_sum)) < 1e-12


class TestMarginals:
    def test_position_marginal_is_wavefunction_density(self):
        space = FockSpace(120)
        state = reference_states.magic_state(space, 0.2)
        x = np.linspace(-9.0, 9.0, 1201)
        px, pp = marginals(state, x, x)
        psi = position_wavefunction(space, state, x)
        assert np.max(np.abs(px - np.abs(psi) ** 2)) < 1e-12
        assert abs(np.trapezoid(px, x) - 1.0) < 1e-6
        assert abs(np.trapezoid(pp, x) - 1.0) < 1e-6

    def test_momentum_marginal_is_rotated_position(self):
        space = FockSpace(120)
        rng = np.random.default_rng(5)
        vec = random_low_level_state(space, rng)
        grid = np.linspace(-6.0, 6.0, 401)
        _, pp = marginals(vec, grid, grid)
        rot = np.exp(0.5j * np.pi * np.arange(space.dim)) * vec
        px_rot, _ = marginals(rot, -grid, grid)
        assert np.max(np.abs(pp - px_rot)) < 1e-10

    def test_comb_peaks_on_lattice(self):
        space = FockSpace(250)
        state = reference_states.magic_state(space, 0.1)
        x = np.linspace(-6.0, 6.0, 1201)
        px, _ = marginals(state, x, x)
        interior = px[1:-1]
        peak_idx = 1 + np.nonzero((interior > px[:-2]) & (interior > px[2:]) & (interior > 0.05 * px.max()))[0]
        spacing = np.diff(x[peak_idx])
        assert np.allclose(spacing, np.sqrt(np.pi), atol=0.02)

    def test_density_matrix_marginals(self):
        space = FockSpace(60)
        dm = DensityMatrix.from_states([space.basis_state(0), space.basis_state(2)], [0.5, 0.5])
        x = np.linspace(-8.0, 8.0, 801)
        px, pp = marginals(dm, x, x)
        assert abs(np.trapezoid(px, x) - 1.0) < 1e-8
        assert np.max(np.abs(px - pp)) < 1e-12  # Fock mixtures are rotation symmetric


class TestCsvExport:
    def test_wigner_round_trip(self, tmp_path):
        space = FockSpace(40)
        x = np.linspace(-2.0, 2.0, 11)
        p = np.linspace(-1.0, 1.0, 7)
        w = wigner(space.basis_state(0), x, p)
        path = tmp_path / "wigner.csv"
        write_wigner_csv(path, x, p, w)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (x.size * p.size, 3)
        assert np.allclose(data[:, 2].reshape(x.size, p.size), w, atol=1e-10)
        assert np.allclose(data[: p.size, 1], p)

    def test_marginals_round_trip(self, tmp_path):
        space = FockSpace(40)
        x = np.linspace(-3.0, 3.0, 31)
        px, pp = marginals(space.basis_state(1), x, x)
        path = tmp_path / "marginals.csv"
        write_marginals_csv(path, x, px, x, pp)
        rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
        got_x = np.array([float(r[2]) for r in rows if r[0] == "x"])
        got_p = np.array([float(r[2]) for r in rows if r[0] == "p"])
        assert np.allclose(got_x, px, atol=1e-10)
        assert np.allclose(got_p, pp, atol=1e-10)


class TestReferenceStates:
    def test_combs_are_even_parity(self):
        space = FockSpace(200)
        for mu in (0, 1):
            coeffs = reference_states.comb_coefficients(space, mu, 0.1)
            assert np.all(coeffs[1::2] == 0)
            assert np.linalg.norm(coeffs) > 0

    def test_magic_state_normalized(self):
        state = reference_states.magic_state(FockSpace(200), 0.1)
        assert abs(np.linalg.norm(state.data) - 1.0) < 1e-12

    def test_magic_state_is_hadamard_eigenstate_after_decoding(self):
        space = FockSpace(250)
        state = reference_states.magic_state(space, 0.1)
        rotated = np.exp(0.5j * np.pi * np.arange(space.dim)) * state.data
        f_plain = logical_fidelity(state, "H+")
        f_rot = logical_fidelity(rotated, "H+")
        assert abs(f_plain - f_rot) < 1e-9

    def test_squeezing_improves_with_smaller_beta(self):
        space = FockSpace(250)
        dbs = [squeezing(reference_states.logical_state(space, 0, b)).db_x for b in (0.4, 0.2, 0.1, 0.05)]
        assert np.all(np.diff(dbs) > 0)

    def test_parameter_validation(self):
        space = FockSpace(50)
        with pytest.raises(ValueError):
            reference_states.comb_coefficients(space, 2, 0.1)
        with pytest.raises(ValueError):
            reference_states.comb_coefficients(space, 0, -0.1)
        with pytest.raises(ValueError):
            reference_states.magic_state(space, 0.1, sign=0)
