"""Tests for the split-step integrator and time-domain growth measurement."""

import numpy as np
import pytest

from dslab.dynamics.evolve import (
    Field2DC,
    PeriodicDomain,
    SplitStepSolver,
    evolve,
    line_soliton_2d,
    mass,
    measure_growth,
    pencil_profile,
    perturbation_norm,
    phi_x_of,
    project_kappa,
    seed_perturbation,
    step,
)
from dslab.errors import BlowUpError, GrowthWindowError, PreconditionError
from dslab.spectral.operators import sech


@pytest.fixture
def small_domain():
    return PeriodicDomain(20.0, 64, 4, 0.4)


def _bump(domain):
    return (sech(domain.x) * np.exp(-0.05 * domain.x**2)).astype(complex)


class TestDomain:
    @pytest.mark.parametrize("args", [(0.0, 64, 4, 0.4), (20.0, 64, 4, 0.0), (20.0, 2, 4, 0.4), (20.0, 64, 0, 0.4)])
    def test_rejects_bad_sizes(self, args):
        with pytest.raises(PreconditionError):
            PeriodicDomain(*args)

    def test_transverse_period(self, small_domain):
        assert small_domain.Ly == pytest.approx(2.0 * np.pi / 0.4)
        assert small_domain.shape == (64, 4)
        assert small_domain.x[0] == -20.0

    def test_dealias_mask_keeps_low_modes(self, small_domain):
        assert small_domain.dealias[0, 0]
        assert not small_domain.dealias[32, 0]

    def test_dealias_rule_is_the_same_on_both_axes(self):
        # Ly = 2 Lx makes the two wavenumber grids identical
        domain = PeriodicDomain(6.0, 12, 12, np.pi / 6.0)
        assert np.allclose(domain.xi, domain.eta)
        assert np.array_equal(domain.dealias, domain.dealias.T)
        assert np.count_nonzero(domain.dealias[:, 0]) == 9


class TestPotential:
    def test_line_soliton_potential(self, params):
        domain = PeriodicDomain(20.0, 256, 1, 1.0)
        rho = sech(domain.x)[:, None] ** 2
        phi_x = phi_x_of(rho, domain, params)
        assert np.max(np.abs(phi_x[:, 0] - (sech(domain.x) ** 2 - 1.0 / 20.0))) < 1e-10

    def test_mean_mode_is_removed(self, small_domain, params, rng):
        rho = rng.uniform(size=small_domain.shape)
        assert abs(np.mean(phi_x_of(rho, small_domain, params))) < 1e-12


class TestSplitStep:
    def test_conserves_mass(self, small_domain, params):
        field = seed_perturbation(small_domain, _bump(small_domain), 1e-4)
        final = SplitStepSolver(small_domain, params, 1e-2).run(field, 50)
        assert mass(final) == pytest.approx(mass(field), rel=1e-12)
        assert final.t == pytest.approx(0.5)

    def test_time_reversible(self, small_domain, params):
        field = seed_perturbation(small_domain, _bump(small_domain), 1e-4)
        forward = SplitStepSolver(small_domain, params, 1e-2).run(field, 20)
        back = SplitStepSolver(small_domain, params, -1e-2).run(forward, 20)
        assert np.max(np.abs(back.A - field.A)) < 1e-10
        assert back.t == pytest.approx(0.0, abs=1e-12)

    def test_single_step_helper(self, small_domain, params):
        field = line_soliton_2d(small_domain)
        assert np.allclose(step(field, 1e-2, params).A, SplitStepSolver(small_domain, params, 1e-2)(field).A)

    def test_zero_timestep_rejected(self, small_domain, params):
        with pytest.raises(PreconditionError):
            SplitStepSolver(small_domain, params, 0.0)

    def test_line_soliton_keeps_its_shape(self, params):
        domain = PeriodicDomain(20.0, 512, 1, 1.0)
        final = SplitStepSolver(domain, params, 1e-3).run(line_soliton_2d(domain), 10000)
        assert final.t == pytest.approx(10.0)
        s = sech(domain.x)
        assert np.linalg.norm(np.abs(final.A[:, 0]) - s) / np.linalg.norm(s) < 1e-4

    def test_plane_wave_is_exact(self, params):
        domain = PeriodicDomain(10.0, 32, 4, 0.5)
        xi0, a = 3.0 * np.pi / domain.Lx, 0.7
        plane = a * np.exp(1j * xi0 * domain.x)[:, None] * np.ones(domain.Ny)
        final = SplitStepSolver(domain, params, 1e-2).run(Field2DC(A=plane, domain=domain), 100)
        t = final.t
        exact = a * np.exp(1j * (xi0 * domain.x - xi0**2 * t + params.gamma1 * a**2 * t))[:, None]
        assert np.max(np.abs(final.A - exact)) < 1e-12

    def test_second_order_in_time(self, small_domain, params):
        field = seed_perturbation(small_domain, _bump(small_domain), 0.1)
        dts = [0.01, 0.005, 0.0025, 0.00125]
        finals = [SplitStepSolver(small_domain, params, dt).run(field, int(round(0.25 / dt))).A for dt in dts]
        gaps = [np.linalg.norm(a - b) for a, b in zip(finals, finals[1:])]
        order, _ = np.polyfit(np.log(dts[:-1]), np.log(gaps), 1)
        assert order == pytest.approx(2.0, abs=0.1)

    def test_line_soliton_stays_homogeneous_in_y(self, params):
        domain = PeriodicDomain(20.0, 128, 8, 0.5)
        final = SplitStepSolver(domain, params, 1e-2).run(line_soliton_2d(domain), 100)
        assert np.max(np.abs(final.A - final.A[:, :1])) < 1e-12

    def test_blow_up_is_reported(self, small_domain, params):
        A = line_soliton_2d(small_domain).A.copy()
        A[3, 1] = np.nan
        with pytest.raises(BlowUpError):
            step(Field2DC(A=A, domain=small_domain), 1e-2, params)

    def test_evolve_records_snapshots(self, small_domain, params):
        field = seed_perturbation(small_domain, _bump(small_domain), 1e-4)
        run = evolve(field, 0.5, 1e-2, params, record_every=10)
        assert len(run.times) == 6
        assert run.final.t == pytest.approx(0.5)
        assert np.ptp(run.masses) < 1e-12 * run.masses[0]


class TestPerturbation:
    def test_seed_has_requested_norm(self, small_domain):
        field = seed_perturbation(small_domain, _bump(small_domain), 3e-5)
        assert perturbation_norm(field) == pytest.approx(3e-5, rel=1e-9)

    def test_line_soliton_has_no_transverse_part(self, small_domain):
        assert np.max(np.abs(project_kappa(line_soliton_2d(small_domain).A))) < 1e-14

    def test_needs_three_transverse_points(self):
        domain = PeriodicDomain(20.0, 64, 2, 0.4)
        with pytest.raises(PreconditionError):
            seed_perturbation(domain, _bump(domain), 1e-4)

    def test_pencil_profile(self, spectral_grid, params, omega0):
        domain = PeriodicDomain(20.0, 128, 8, 0.5 * omega0.omega0)
        profile, lam = pencil_profile(domain.kappa, spectral_grid, params, omega0.omega0, domain.x)
        assert lam > 0
        assert profile.shape == domain.x.shape
        assert np.iscomplexobj(profile)

        profile, lam = pencil_profile(1.3 * omega0.omega0, spectral_grid, params, omega0.omega0, domain.x)
        assert lam is None
        assert np.max(np.abs(profile.imag)) == 0.0


class TestMeasureGrowth:
    @pytest.mark.parametrize("amp, T, dt", [(1e-3, 1.0, 1e-2), (1e-4, 0.0, 1e-2), (1e-4, 1.0, -1e-2)])
    def test_rejects_bad_arguments(self, small_domain, params, amp, T, dt):
        field = seed_perturbation(small_domain, _bump(small_domain), 1e-4)
        with pytest.raises(PreconditionError):
            measure_growth(field, amp, T, dt, params)

    def test_window_not_reached(self, small_domain, params):
        field = seed_perturbation(small_domain, _bump(small_domain), 1e-4)
        with pytest.raises(GrowthWindowError):
            measure_growth(field, 1e-4, 0.5, 1e-2, params)
        result = measure_growth(field, 1e-4, 0.5, 1e-2, params, require_window=False)
        assert not result.window_reached
        assert len(result.rows()) == 51

    def test_no_growth_beyond_the_band(self, spectral_grid, params, omega0):
        domain = PeriodicDomain(spectral_grid.Lx, 256, 8, 1.2 * omega0.omega0)
        profile, lam = pencil_profile(domain.kappa, spectral_grid, params, omega0.omega0, domain.x)
        assert lam is None
        field = seed_perturbation(domain, profile, 1e-4)
        result = measure_growth(field, 1e-4, 100.0, 1e-2, params, require_window=False)
        assert not result.window_reached
        assert result.lam < 1e-2

    @pytest.mark.slow
    def test_matches_pencil_rate(self, spectral_grid, params, omega0):
        domain = PeriodicDomain(spectral_grid.Lx, 256, 8, 0.5 * omega0.omega0)
        profile, lam = pencil_profile(domain.kappa, spectral_grid, params, omega0.omega0, domain.x)
        field = seed_perturbation(domain, profile, 1e-4)
        result = measure_growth(field, 1e-4, 400.0, 1e-2, params)
        assert result.window_reached
        assert result.lam == pytest.approx(lam, rel=5e-2)

    @pytest.mark.slow
    def test_rate_does_not_depend_on_seed_amplitude(self, spectral_grid, params, omega0):
        domain = PeriodicDomain(spectral_grid.Lx, 256, 8, 0.5 * omega0.omega0)
        profile, _ = pencil_profile(domain.kappa, spectral_grid, params, omega0.omega0, domain.x)
        rates = []
        for amp in (1e-4, 5e-5):
            result = measure_growth(seed_perturbation(domain, profile, amp), amp, 400.0, 1e-2, params)
            assert result.window_reached
            rates.append(result.lam)
        assert rates[1] == pytest.approx(rates[0], rel=2e-2)
