"""Concrete verification checks, each a small numerical experiment with a pass threshold."""

import numpy as np

from ..dynamics.continuation import continue_branch, line_soliton_field, steady_residual
from ..dynamics.evolve import (
    PeriodicDomain,
    SplitStepSolver,
    line_soliton_2d,
    mass,
    measure_growth,
    pencil_profile,
    seed_perturbation,
)
from ..dynamics.instability import growth_rate, schur_S, unreduced_residual
from ..models import Params
from ..spectral.grid import Parity, build_grid
from ..spectral.operators import (
    assemble_A1,
    assemble_schrodinger,
    compute_omega0,
    compute_point_spectrum,
    cutoff_correction,
    form_limit_scan,
    negative_eigenvalue_count,
    quadratic_form_A1,
    quadratic_form_identity_rhs,
    sech,
)
from ..spectral.resolvent import (
    StateVector,
    assemble_L,
    fit_loglog_slope,
    resolvent_norm_scan,
    reverser_matrix,
    solve_iooss_zero_mode,
    solve_resolvent,
    zero_mode_residual,
)
from .base import BaseCheck, VerifyContext


class SecondDerivativeAccuracy(BaseCheck):
    location = "collocation grid"
    label = "second derivative of sech matches the analytic profile"
    tolerance = 1e-3
    fd_tolerance = 5e-2

    def measure(self, ctx: VerifyContext):
        g = ctx.grid
        s = sech(g.nodes)
        exact = s - 2.0 * s**3
        err = float(np.max(np.abs(g.D2 @ s - exact)))
        return err, f"max error {err:.2e}"


class CoupledOperatorSymmetry(BaseCheck):
    location = "coupled operator"
    label = "coupled operator is symmetric in its weighted inner product"
    tolerance = 1e-10

    def measure(self, ctx: VerifyContext):
        defect = assemble_A1(ctx.grid, ctx.params).symmetry_defect()
        return defect, f"defect {defect:.2e}"


class SingleNegativeDirection(BaseCheck):
    location = "coupled operator, gamma (1, 1, 1)"
    label = "coupled operator has exactly one negative eigenvalue on the symmetric subspace"

    def measure(self, ctx: VerifyContext):
        count = negative_eigenvalue_count(assemble_A1(ctx.grid, ctx.params), [Parity.EVEN, Parity.ODD])
        return abs(count - 1), f"{count} negative eigenvalue(s)"


class SchrodingerGroundState(BaseCheck):
    location = "Schrodinger c = 2"
    label = "1 - d_xx - 2 sech^2 has ground-state eigenvalue 0"
    tolerance = 1e-6
    fd_tolerance = 1e-2

    def measure(self, ctx: VerifyContext):
        spectrum = compute_point_spectrum(assemble_schrodinger(ctx.grid, 2.0), None, count=1, edge_tol=0.5)
        value = abs(float(spectrum.eigenvalues[0]))
        return value, f"eigenvalue {spectrum.eigenvalues[0]:.3e}"


class QuadraticFormIdentity(BaseCheck):
    location = "coupled quadratic form"
    label = "quadratic form equals its completed-square expression"
    tolerance = 1e-8
    fd_tolerance = 5e-2

    def measure(self, ctx: VerifyContext):
        g = ctx.grid
        u1 = sech(g.nodes) * (1.0 + 0.3 * np.cos(g.nodes))
        phi = np.tanh(g.nodes) * np.exp(-((g.nodes / 3.0) ** 2))
        lhs = quadratic_form_A1(u1, phi, g, ctx.params)
        rhs = quadratic_form_identity_rhs(u1, phi, g, ctx.params)
        rel = abs(lhs - rhs) / abs(rhs)
        return rel, f"relative gap {rel:.2e}"


class TrialFamilyLimit(BaseCheck):
    location = "coupled quadratic form"
    label = "quadratic form on the cutoff trial family approaches -16/3"
    tolerance = 1e-4
    fd_tolerance = 5e-2

    def measure(self, ctx: VerifyContext):
        g = ctx.grid
        R = g.Lx / 4.0
        value = form_limit_scan([R], g, ctx.params)[0]
        predicted = -16.0 / 3.0 + cutoff_correction(R, ctx.params)
        rel = abs(value - predicted) / abs(predicted)
        return rel, f"R={R:g}: form {value:.6f}, predicted {predicted:.6f}"


class ReverserAnticommutes(BaseCheck):
    location = "spatial dynamics"
    label = "spatial-dynamics operator anticommutes with the reverser"
    tolerance = 1e-12

    def measure(self, ctx: VerifyContext):
        L = assemble_L(ctx.grid, ctx.params).matrix
        S = reverser_matrix(ctx.grid.N)
        defect = float(np.max(np.abs(L @ S + S @ L)))
        return defect, f"max entry {defect:.2e}"


class ResolventRoundTrip(BaseCheck):
    location = "resolvent"
    label = "resolvent solve reproduces a known state"
    tolerance = 1e-8

    def measure(self, ctx: VerifyContext):
        g = ctx.grid
        omega0 = ctx.omega0.omega0
        k = 2.5 * omega0
        target = StateVector.random(g, np.random.default_rng(ctx.config.seed), complex_valued=True)
        L = assemble_L(g, ctx.params)
        rhs = StateVector.from_stacked(L.apply(target.stacked()) - 1j * k * target.stacked())
        solved = solve_resolvent(k, rhs, g, ctx.params, omega0=omega0, L=L).solution
        err = float(np.linalg.norm(solved.stacked() - target.stacked()) / np.linalg.norm(target.stacked()))
        return err, f"k={k:.4f}: relative error {err:.2e}"


class ZeroModeSolve(BaseCheck):
    location = "zero-mode equation"
    label = "zero-mode solve satisfies L w + N(w_dag) = 0"
    tolerance = 1e-8

    def measure(self, ctx: VerifyContext):
        g = ctx.grid
        zero = np.zeros(g.N)
        s = sech(g.nodes)
        wdag = StateVector(u1=s, v1=zero, u2=zero, v2=zero, phi=np.tanh(g.nodes), psi=zero, phi_x=s**2)
        w = solve_iooss_zero_mode(wdag, g, ctx.params)
        res = zero_mode_residual(w, wdag, g, ctx.params)
        return res, f"residual {res:.2e}"


class LineSolitonEquilibrium(BaseCheck):
    location = "steady mode equations"
    label = "line soliton is a steady solution of the mode equations"
    tolerance = 1e-9

    def measure(self, ctx: VerifyContext):
        field = line_soliton_field(ctx.grid, 8, omega=ctx.omega0.omega0)
        res = steady_residual(field, ctx.grid, ctx.params).norm
        return res, f"residual {res:.2e}"


class SchurKernelAtBandEdge(BaseCheck):
    location = "transverse instability"
    label = "Schur complement is singular at kappa = omega0"
    tolerance = 1e-6

    def measure(self, ctx: VerifyContext):
        omega0 = ctx.omega0.omega0
        op = schur_S(omega0, ctx.grid, ctx.params)
        spectrum = compute_point_spectrum(op, Parity.EVEN, count=1, edge_tol=0.5, localization_threshold=0.0)
        value = abs(float(spectrum.eigenvalues[0]))
        return value, f"lowest eigenvalue {spectrum.eigenvalues[0]:.3e}"


class GrowthModeResidual(BaseCheck):
    location = "transverse instability"
    label = "unstable mode at kappa = omega0/2 solves the unreduced system"
    tolerance = 1e-7

    def measure(self, ctx: VerifyContext):
        omega0 = ctx.omega0.omega0
        kappa = 0.5 * omega0
        lam, mode = growth_rate(kappa, ctx.grid, ctx.params, omega0=omega0)
        res = unreduced_residual(kappa, lam, mode, ctx.grid, ctx.params)
        return res, f"lambda {lam:.6f}, residual {res:.2e}"


class SplitStepInvariants(BaseCheck):
    location = "time integrator"
    label = "split-step integrator conserves mass and is time-reversible"
    tolerance = 1e-10

    def measure(self, ctx: VerifyContext):
        domain = PeriodicDomain(ctx.grid.Lx, 128, 8, 0.5 * ctx.omega0.omega0)
        profile = sech(domain.x) * np.exp(-0.1 * domain.x**2)
        field = seed_perturbation(domain, profile, 1e-4)
        forward = SplitStepSolver(domain, ctx.params, 1e-2).run(field, 20)
        back = SplitStepSolver(domain, ctx.params, -1e-2).run(forward, 20)
        drift = abs(mass(forward) - mass(field)) / mass(field)
        reversal = float(np.max(np.abs(back.A - field.A)))
        return max(drift, reversal), f"mass drift {drift:.2e}, reversal error {reversal:.2e}"


class LineSolitonShape(BaseCheck):
    location = "time integrator"
    label = "line soliton keeps its shape under the time integrator"
    tolerance = 1e-5

    def measure(self, ctx: VerifyContext):
        domain = PeriodicDomain(ctx.grid.Lx, 256, 1, 1.0)
        field = line_soliton_2d(domain)
        final = SplitStepSolver(domain, ctx.params, 1e-3).run(field, 1000)
        s = sech(domain.x)
        err = float(np.linalg.norm(np.abs(final.A[:, 0]) - s) / np.linalg.norm(s))
        return err, f"relative shape error {err:.2e} at t = {final.t:g}"


class SixSechSpectrum(BaseCheck):
    location = "Schrodinger c = 6"
    label = "eigenvalues -3, 0 of 1 - d_xx - 6 sech^2"
    tolerance = 1e-6
    fd_tolerance = 2e-2

    def measure(self, ctx: VerifyContext):
        spectrum = compute_point_spectrum(assemble_schrodinger(ctx.grid, 6.0), None, count=2, edge_tol=0.5)
        values = spectrum.eigenvalues
        err = float(max(abs(values[0] + 3.0), abs(values[1])))
        return err, f"eigenvalues {values[0]:.6f}, {values[1]:.3e}"


class NegativeDirectionOtherTriples(BaseCheck):
    location = "coupled operator, other admissible gammas"
    label = "one negative eigenvalue at gamma (0.5, 1.5, 2) and (1.8, 0.2, 0.5)"

    triples = ((1.5, 2.0), (0.2, 0.5))

    def measure(self, ctx: VerifyContext):
        # doubled box for the slower phi decay at large gamma3
        g = ctx.grid
        wide = build_grid(2.0 * g.Lx, 2 * g.N, g.scheme)
        counts = []
        for gamma2, gamma3 in self.triples:
            op = assemble_A1(wide, Params.from_gamma2(gamma2, gamma3))
            counts.append(negative_eigenvalue_count(op, [Parity.EVEN, Parity.ODD]))
        return sum(abs(c - 1) for c in counts), f"counts {counts}"


class BandEdgeSchemeGap(BaseCheck):
    location = "band edge omega0"
    label = "Fourier and extrapolated finite-difference omega0^2 agree"
    tolerance = 1e-5

    def measure(self, ctx: VerifyContext):
        result = compute_omega0(ctx.grid, ctx.params, cross_check=True)
        gap = float(result.discretization_gap)
        return gap, f"omega0 {result.omega0:.10f}, gap in omega0^2 {gap:.2e}"


class ResolventScaling(BaseCheck):
    location = "resolvent"
    label = "resolvent norms decay like 1/|k| (X to X) and stay bounded (X to D)"
    tolerance = 0.2

    ks = (10.0, 30.0, 100.0, 300.0, 1000.0)

    def measure(self, ctx: VerifyContext):
        points = resolvent_norm_scan(self.ks, ctx.grid, ctx.params, omega0=ctx.omega0.omega0, seed=ctx.config.seed)
        slope_xx = fit_loglog_slope(self.ks, [p.opnorm_XX for p in points])
        slope_xd = fit_loglog_slope(self.ks, [p.opnorm_XD for p in points])
        return max(abs(slope_xx + 1.0), abs(slope_xd)), f"slopes {slope_xx:.3f} (X to X), {slope_xd:.3f} (X to D)"


class BranchFrequencyIsEven(BaseCheck):
    location = "dimension-breaking branch"
    label = "branch frequency shift has no linear term in s"
    tolerance = 1e-3

    def measure(self, ctx: VerifyContext):
        settings = ctx.config.continuation
        branch = continue_branch(settings.s_max, settings.ds, ctx.grid, ctx.params, M=settings.M)
        if branch.truncated or max(sample.residual for sample in branch.samples) > 1e-9:
            return np.inf, f"branch stopped at s = {branch.s_values[-1]:g}"
        a, b = branch.fit_frequency()
        ratio = abs(a) / (abs(b) * settings.s_max)
        return ratio, f"omega - omega0 = {a:.2e} s + {b:.6f} s^2"


class EvolutionMatchesPencil(BaseCheck):
    location = "transverse instability"
    label = "time-domain growth at kappa = omega0/2 matches the pencil rate"
    tolerance = 5e-2

    def measure(self, ctx: VerifyContext):
        omega0 = ctx.omega0.omega0
        domain = PeriodicDomain(ctx.grid.Lx, 256, 8, 0.5 * omega0)
        profile, lam = pencil_profile(domain.kappa, ctx.grid, ctx.params, omega0, domain.x)
        result = measure_growth(seed_perturbation(domain, profile, 1e-4), 1e-4, 400.0, 1e-2, ctx.params)
        rel = abs(result.lam - lam) / lam
        return rel, f"evolved {result.lam:.5f}, pencil {lam:.5f}"
