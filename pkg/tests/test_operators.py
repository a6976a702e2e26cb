"""Tests for the linearized operators, the band edge omega0 and the quadratic form."""

import numpy as np
import pytest

from dslab.errors import PreconditionError, SpectrumError
from dslab.models import Params, Scheme
from dslab.spectral.grid import Parity, build_grid, check_parity
from dslab.spectral.operators import (
    assemble_A1,
    assemble_A2,
    assemble_schrodinger,
    compute_omega0,
    compute_point_spectrum,
    cutoff,
    cutoff_correction,
    cutoff_derivative,
    cutoff_energy,
    form_limit_scan,
    negative_eigenvalue_count,
    quadratic_form_A1,
    quadratic_form_identity_rhs,
    richardson_extrapolate,
    sech,
)


class TestSchrodinger:
    def test_six_sech_eigenvalues(self, spectral_grid):
        spectrum = compute_point_spectrum(assemble_schrodinger(spectral_grid, 6.0), count=2, edge_tol=0.5)
        assert spectrum.eigenvalues[0] == pytest.approx(-3.0, abs=1e-6)
        assert spectrum.eigenvalues[1] == pytest.approx(0.0, abs=1e-6)

    def test_six_sech_eigenfunction_parities(self, spectral_grid):
        spectrum = compute_point_spectrum(assemble_schrodinger(spectral_grid, 6.0), count=2, edge_tol=0.5)
        check_parity(spectrum.eigenvectors[0], Parity.EVEN, 1e-8)
        check_parity(spectrum.eigenvectors[1], Parity.ODD, 1e-8)

    def test_six_sech_on_finite_differences(self, fd_grid):
        spectrum = compute_point_spectrum(assemble_schrodinger(fd_grid, 6.0), count=2, edge_tol=0.5)
        assert spectrum.eigenvalues[0] == pytest.approx(-3.0, abs=2e-2)
        assert spectrum.eigenvalues[1] == pytest.approx(0.0, abs=2e-2)

    def test_six_sech_eigenvectors(self, spectral_grid):
        spectrum = compute_point_spectrum(assemble_schrodinger(spectral_grid, 6.0), count=2, edge_tol=0.5)
        s = sech(spectral_grid.nodes)
        for v, exact in zip(spectrum.eigenvectors, (s**2, -np.tanh(spectral_grid.nodes) * s)):
            v_hat = v / spectral_grid.norm(v)
            e_hat = exact / spectral_grid.norm(exact)
            err = min(spectral_grid.norm(v_hat - e_hat), spectral_grid.norm(v_hat + e_hat))
            assert err < 1e-5

    def test_ground_state_is_sech(self, spectral_grid):
        spectrum = compute_point_spectrum(assemble_schrodinger(spectral_grid, 2.0), count=1, edge_tol=0.5)
        assert spectrum.eigenvalues[0] == pytest.approx(0.0, abs=1e-6)
        v = spectrum.eigenvectors[0]
        s = sech(spectral_grid.nodes)
        cosine = spectral_grid.inner(v, s) / (spectral_grid.norm(v) * spectral_grid.norm(s))
        assert cosine == pytest.approx(1.0, abs=1e-8)

    def test_requesting_too_many_raises(self, spectral_grid):
        with pytest.raises(SpectrumError):
            compute_point_spectrum(assemble_schrodinger(spectral_grid, 2.0), count=2, edge_tol=0.5)

    def test_A2_is_the_c2_operator(self, spectral_grid, params):
        op = assemble_A2(spectral_grid, params)
        assert np.array_equal(op.matrix, assemble_schrodinger(spectral_grid, 2.0).matrix)
        assert op.block_roles == ["u2"]


class TestA1:
    @pytest.mark.parametrize("scheme", [Scheme.FOURIER, Scheme.FINITE_DIFFERENCE])
    def test_weighted_symmetry(self, scheme, params, skewed_params):
        grid = build_grid(16.0, 96, scheme)
        for p in (params, skewed_params):
            assert assemble_A1(grid, p).symmetry_defect() < 1e-10

    def test_single_negative_direction(self, spectral_grid, params, skewed_params):
        for p in (params, skewed_params):
            op = assemble_A1(spectral_grid, p)
            assert negative_eigenvalue_count(op, [Parity.EVEN, Parity.ODD]) == 1

    @pytest.mark.parametrize("gamma2, gamma3", [(1.5, 2.0), (0.2, 0.5)])
    def test_single_negative_direction_at_other_coefficients(self, gamma2, gamma3):
        # a wide box holds the slowly decaying phi component at large gamma3
        grid = build_grid(40.0, 512, Scheme.FOURIER)
        op = assemble_A1(grid, Params.from_gamma2(gamma2, gamma3))
        assert negative_eigenvalue_count(op, [Parity.EVEN, Parity.ODD]) == 1

    def test_translation_mode(self, spectral_grid, params, skewed_params):
        x = spectral_grid.nodes
        s = sech(x)
        v = np.concatenate([-np.tanh(x) * s, s**2])
        for p in (params, skewed_params):
            op = assemble_A1(spectral_grid, p)
            assert op.norm(op.apply(v)) < 1e-6 * op.norm(v)

    def test_subspace_must_match_blocks(self, spectral_grid, params):
        with pytest.raises(PreconditionError):
            compute_point_spectrum(assemble_A1(spectral_grid, params), [Parity.EVEN])

    def test_restriction_to_parity_subspace(self, coarse_spectral_grid, params):
        op = assemble_A1(coarse_spectral_grid, params)
        stiffness, mass, basis = op.restricted([Parity.EVEN, Parity.ODD])
        assert stiffness.shape == (basis.shape[1], basis.shape[1])
        assert basis.shape[1] == coarse_spectral_grid.N
        assert np.array_equal(stiffness, stiffness.T)
        assert np.all(mass > 0)

    def test_shift_moves_spectrum(self, spectral_grid, params, omega0):
        shifted = assemble_A1(spectral_grid, params).shifted(omega0.omega0**2)
        spectrum = compute_point_spectrum(shifted, [Parity.EVEN, Parity.ODD], count=1, edge_tol=1e-3, localization_threshold=0.0)
        assert spectrum.eigenvalues[0] == pytest.approx(0.0, abs=1e-8)


class TestOmega0:
    def test_band_edge(self, omega0):
        assert 0.0 < omega0.omega0 < np.sqrt(3.0)
        assert omega0.eigenvalue == pytest.approx(-omega0.omega0**2)

    def test_eigenfield_parities(self, omega0):
        check_parity(omega0.u1, Parity.EVEN, 1e-8)
        check_parity(omega0.phi, Parity.ODD, 1e-8)
        assert omega0.u1[len(omega0.u1) // 2] > 0

    def test_eigenfield_is_normalized(self, spectral_grid, params, omega0):
        op = assemble_A1(spectral_grid, params)
        assert op.norm(omega0.stacked) == pytest.approx(1.0, abs=1e-10)

    def test_eigen_equation(self, spectral_grid, params, omega0):
        op = assemble_A1(spectral_grid, params)
        v = omega0.stacked
        defect = op.norm(op.apply(v) - omega0.eigenvalue * v)
        assert defect < 1e-6

    def test_resolution_independence(self, coarse_omega0, omega0):
        assert abs(coarse_omega0.omega0**2 - omega0.omega0**2) < 1e-3

    def test_finite_difference_cross_check(self, fd_grid, params):
        result = compute_omega0(fd_grid, params, cross_check=True)
        assert result.discretization_gap is not None
        assert result.discretization_gap < 0.1

    @pytest.mark.slow
    def test_schemes_agree_after_extrapolation(self, spectral_grid, params):
        result = compute_omega0(spectral_grid, params, cross_check=True, fd_levels=(256, 512, 1024))
        assert result.discretization_gap < 1e-5

    def test_depends_on_coefficients(self, spectral_grid, params, skewed_params):
        assert compute_omega0(spectral_grid, skewed_params).omega0 != pytest.approx(
            compute_omega0(spectral_grid, params).omega0, abs=1e-6
        )


class TestRichardson:
    def test_removes_even_error_terms(self):
        hs = np.array([0.4, 0.2, 0.1])
        values = 1.5 + 3.0 * hs**2 - 5.0 * hs**4
        assert richardson_extrapolate(values, hs) == pytest.approx(1.5, abs=1e-12)

    def test_two_levels_use_one_term(self):
        hs = np.array([0.2, 0.1])
        assert richardson_extrapolate(2.0 + hs**2, hs) == pytest.approx(2.0, abs=1e-12)


class TestQuadraticForm:
    def test_identity_on_localized_pairs(self, spectral_grid, params, rng):
        x = spectral_grid.nodes
        for _ in range(10):
            a, b = rng.uniform(0.5, 2.0, size=2)
            c = rng.standard_normal(4)
            u1 = (c[0] + c[1] * np.cos(x / a)) * sech(x / a)
            phi = (c[2] * np.tanh(x) + c[3] * np.sin(x / b)) * np.exp(-((x / (2.0 * b)) ** 2))
            lhs = quadratic_form_A1(u1, phi, spectral_grid, params)
            rhs = quadratic_form_identity_rhs(u1, phi, spectral_grid, params)
            assert abs(lhs - rhs) <= 1e-8 * max(abs(rhs), 1.0)

    def test_identity_holds_for_other_coefficients(self, spectral_grid, skewed_params):
        x = spectral_grid.nodes
        u1 = sech(x) * (1.0 - 0.4 * x**2 / (1.0 + x**2))
        phi = np.tanh(x) * np.exp(-(x**2) / 8.0)
        lhs = quadratic_form_A1(u1, phi, spectral_grid, skewed_params)
        rhs = quadratic_form_identity_rhs(u1, phi, spectral_grid, skewed_params)
        assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_nonnegative_off_the_sech_squared_direction(self, spectral_grid, params, skewed_params, rng):
        x = spectral_grid.nodes
        s2 = sech(x) ** 2
        for p in (params, skewed_params):
            for _ in range(20):
                a, b = rng.uniform(0.4, 3.0, size=2)
                c = rng.standard_normal(4)
                u1 = (c[0] + c[1] * x**2 / a**2) * np.exp(-((x / a) ** 2))
                u1 -= spectral_grid.inner(u1, s2) / spectral_grid.inner(s2, s2) * s2
                phi = (c[2] * x + c[3] * x**3 / b**2) * np.exp(-((x / b) ** 2))
                size = spectral_grid.inner(u1, u1) + spectral_grid.inner(phi, phi)
                assert quadratic_form_A1(u1, phi, spectral_grid, p) >= -1e-8 * size

    def test_form_is_negative_on_the_soliton_pair(self, spectral_grid, params):
        x = spectral_grid.nodes
        value = quadratic_form_A1(sech(x), 2.0 * np.tanh(x) * cutoff(x / 5.0), spectral_grid, params)
        assert value < 0


class TestCutoff:
    def test_values(self):
        x = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
        assert np.allclose(cutoff(x), [1.0, 1.0, 1.0, 0.0, 0.0])
        mid = cutoff(np.array([1.5]))[0]
        assert 0.0 < mid < 1.0

    def test_derivative_matches_difference_quotient(self):
        x = np.linspace(-2.5, 2.5, 41)
        h = 1e-6
        numeric = (cutoff(x + h) - cutoff(x - h)) / (2.0 * h)
        assert np.max(np.abs(numeric - cutoff_derivative(x))) < 1e-5

    def test_energy_is_positive(self):
        assert cutoff_energy() > 0

    def test_correction_decays_like_inverse_radius(self, params):
        assert cutoff_correction(8.0, params) == pytest.approx(0.5 * cutoff_correction(4.0, params))


class TestFormLimit:
    def test_approaches_limit(self, spectral_grid, params):
        R_list = [2.5, 5.0, 10.0]
        values = form_limit_scan(R_list, spectral_grid, params)
        errors = [abs(v + 16.0 / 3.0) for v in values]
        assert errors[0] > errors[1] > errors[2]
        # the R = 2.5 value still carries exponentially small tails of the soliton
        for R, value in zip(R_list[1:], values[1:]):
            predicted = -16.0 / 3.0 + cutoff_correction(R, params)
            assert value == pytest.approx(predicted, rel=1e-4)

    def test_correction_scales_with_gamma2(self, spectral_grid):
        low, high = Params.from_gamma2(0.5, 1.0), Params.from_gamma2(1.5, 1.0)
        assert cutoff_correction(5.0, high) == pytest.approx(3.0 * cutoff_correction(5.0, low))

    @pytest.mark.parametrize("R_list", [[5.0, 2.5], [-1.0], [4.0, 11.0]])
    def test_rejects_bad_radii(self, spectral_grid, params, R_list):
        with pytest.raises(PreconditionError):
            form_limit_scan(R_list, spectral_grid, params)
