"""Tests for the Schur complement, the growth-rate pencil and growth curves."""

import numpy as np
import pytest

from dslab.dynamics.instability import (
    boundary_amplitude,
    growth_curve,
    growth_rate,
    kappa_band,
    mode_alignment_angle,
    schur_S,
    unreduced_residual,
)
from dslab.errors import NoInstabilityError, PreconditionError
from dslab.models import Scheme
from dslab.spectral.grid import Parity, build_grid, check_parity
from dslab.spectral.operators import compute_omega0, compute_point_spectrum, negative_eigenvalue_count


@pytest.fixture(scope="module")
def half_band(spectral_grid, params, omega0):
    kappa = 0.5 * omega0.omega0
    lam, mode = growth_rate(kappa, spectral_grid, params, omega0=omega0.omega0)
    return kappa, lam, mode


@pytest.fixture(scope="module")
def fine_grid():
    return build_grid(20.0, 512, Scheme.FOURIER)


@pytest.fixture(scope="module")
def fine_band(fine_grid, params):
    edge = compute_omega0(fine_grid, params).omega0
    kappa = 0.5 * edge
    lam, mode = growth_rate(kappa, fine_grid, params, omega0=edge)
    return kappa, lam, mode


class TestSchur:
    def test_rejects_nonpositive_kappa(self, spectral_grid, params):
        with pytest.raises(PreconditionError):
            schur_S(0.0, spectral_grid, params)

    def test_weighted_symmetry(self, spectral_grid, params, omega0):
        assert schur_S(0.3 * omega0.omega0, spectral_grid, params).symmetry_defect() < 1e-10

    def test_singular_at_band_edge(self, spectral_grid, params, omega0):
        op = schur_S(omega0.omega0, spectral_grid, params)
        spectrum = compute_point_spectrum(op, Parity.EVEN, count=1, edge_tol=0.5, localization_threshold=0.0)
        assert spectrum.eigenvalues[0] == pytest.approx(0.0, abs=1e-6)

    def test_one_negative_direction_inside_band(self, spectral_grid, params, omega0):
        op = schur_S(0.5 * omega0.omega0, spectral_grid, params)
        assert negative_eigenvalue_count(op, Parity.EVEN) == 1

    def test_positive_beyond_band(self, spectral_grid, params, omega0):
        op = schur_S(1.2 * omega0.omega0, spectral_grid, params)
        assert negative_eigenvalue_count(op, Parity.EVEN) == 0


class TestGrowthRate:
    def test_positive_rate(self, half_band):
        _, lam, _ = half_band
        assert lam > 0

    def test_mode_solves_unreduced_system(self, half_band, spectral_grid, params):
        kappa, lam, mode = half_band
        assert unreduced_residual(kappa, lam, mode, spectral_grid, params) < 1e-8

    def test_mode_parities_and_normalization(self, half_band, spectral_grid):
        _, _, mode = half_band
        check_parity(mode.u1, Parity.EVEN, 1e-8)
        check_parity(mode.u2, Parity.EVEN, 1e-8)
        check_parity(mode.phi, Parity.ODD, 1e-8)
        assert spectral_grid.norm(mode.u1) == pytest.approx(1.0, abs=1e-10)
        assert mode.u1[spectral_grid.N // 2] > 0
        assert boundary_amplitude(mode) < 1e-6

    @pytest.mark.parametrize("factor", [1.0, 1.2, 0.0, -0.3])
    def test_outside_band_is_rejected(self, spectral_grid, params, omega0, factor):
        with pytest.raises(PreconditionError):
            growth_rate(factor * omega0.omega0, spectral_grid, params, omega0=omega0.omega0)

    def test_no_instability_with_wrong_band_edge(self, spectral_grid, params, omega0):
        # a band edge claimed too large lets kappa through where the pencil is positive
        with pytest.raises(NoInstabilityError):
            growth_rate(1.2 * omega0.omega0, spectral_grid, params, omega0=2.0 * omega0.omega0)

    def test_rate_vanishes_at_band_edge(self, half_band, spectral_grid, params, omega0):
        _, lam_mid, _ = half_band
        lam_edge, _ = growth_rate(0.99 * omega0.omega0, spectral_grid, params, omega0=omega0.omega0)
        assert 0 < lam_edge < lam_mid

    def test_monotone_decay_near_band_edge(self, spectral_grid, params, omega0):
        fractions = [0.9, 0.95, 0.99, 0.999]
        rates = [growth_rate(f * omega0.omega0, spectral_grid, params, omega0=omega0.omega0)[0] for f in fractions]
        assert all(a > b for a, b in zip(rates, rates[1:]))

    def test_mode_aligns_with_band_edge_eigenfield(self, spectral_grid, params, omega0):
        _, mode = growth_rate(0.99 * omega0.omega0, spectral_grid, params, omega0=omega0.omega0)
        assert mode_alignment_angle(mode.u1, omega0.u1, spectral_grid) < 5.0

    def test_resolution_independence(self, half_band, fine_band):
        _, lam, _ = half_band
        _, lam_fine, _ = fine_band
        assert abs(lam_fine - lam) < 1e-6

    def test_fine_grid_mode_solves_unreduced_system(self, fine_band, fine_grid, params):
        kappa, lam, mode = fine_band
        assert unreduced_residual(kappa, lam, mode, fine_grid, params) < 1e-8

    def test_reference_rate_at_half_band(self, fine_band):
        _, lam, _ = fine_band
        assert lam == pytest.approx(0.947563, abs=1e-4)

    def test_square_root_law_at_band_edge(self, spectral_grid, params, omega0):
        edge = omega0.omega0
        inner, outer = (growth_rate(f * edge, spectral_grid, params, omega0=edge)[0] for f in (0.996, 0.999))
        # lambda ~ (omega0^2 - kappa^2)^1/2 predicts a ratio of 0.5004
        assert outer / inner == pytest.approx(0.5, abs=0.025)

    def test_other_coefficients(self, spectral_grid, skewed_params):
        edge = compute_omega0(spectral_grid, skewed_params).omega0
        lam, mode = growth_rate(0.5 * edge, spectral_grid, skewed_params, omega0=edge)
        assert lam > 0
        assert unreduced_residual(0.5 * edge, lam, mode, spectral_grid, skewed_params) < 1e-8


class TestGrowthCurve:
    def test_band_is_unstable(self, coarse_spectral_grid, params, coarse_omega0):
        kappas = kappa_band(coarse_omega0.omega0, np.linspace(0.1, 0.9, 5))
        curve = growth_curve(kappas, coarse_spectral_grid, params, omega0=coarse_omega0.omega0)
        assert len(curve.successful()) == 5
        assert all(p.lam > 0 and p.residual < 1e-7 for p in curve.points)
        assert [row[0] for row in curve.rows()] == kappas

    def test_failed_points_are_kept(self, coarse_spectral_grid, params, coarse_omega0):
        kappas = [0.5 * coarse_omega0.omega0, 1.5 * coarse_omega0.omega0]
        curve = growth_curve(kappas, coarse_spectral_grid, params, omega0=coarse_omega0.omega0)
        assert curve.points[0].ok
        assert not curve.points[1].ok
        assert "PreconditionError" in curve.points[1].error
        assert len(curve.rows()) == 1

    def test_threads_match_serial(self, coarse_spectral_grid, params, coarse_omega0):
        kappas = kappa_band(coarse_omega0.omega0, [0.2, 0.4, 0.6, 0.8])
        serial = growth_curve(kappas, coarse_spectral_grid, params, omega0=coarse_omega0.omega0)
        threaded = growth_curve(kappas, coarse_spectral_grid, params, omega0=coarse_omega0.omega0, jobs=3)
        assert [p.lam for p in threaded.points] == pytest.approx([p.lam for p in serial.points], rel=1e-12)
