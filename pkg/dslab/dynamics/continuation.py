"""Dimension-breaking branch of transversely periodic solitons.

Steady solutions are expanded in a cosine series in Y = omega*y,

    u(x, Y) = sum_n u_n(x) cos(nY),   phi(x, Y) = sum_n phi_n(x) cos(nY),

and the steady equations

    u_yy = -u_xx + u - (g1 u^2 + g2 phi_x) u,
    phi_yy = -g3 phi_xx + g3 (u^2)_x

are solved mode by mode with Newton's method. The mode-0 potential lives in the
star space: only phi_0x is an unknown, and the mode-0 phi equation integrates
to phi_0x = [u^2]_0, which is eliminated. The frequency omega is a free unknown
closed by an amplitude constraint on the first mode.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from ..errors import ConditioningError, ConvergenceError, PreconditionError
from ..models import Params, Scheme
from ..spectral.grid import Grid1D, Parity, build_grid, check_parity
from ..spectral.operators import Omega0Result, lowest_A1_eigenpair, sech
from ..utils.logger import get_logger

logger = get_logger("continuation")


class SteadyField2D(BaseModel):
    """Cosine-series coefficients of a steady field; rows are modes n = 0..M."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    u: np.ndarray
    phi: np.ndarray
    phi_x0: np.ndarray
    omega: float
    iterations: int = 0

    @property
    def M(self) -> int:
        return self.u.shape[0] - 1

    def copy_with(self, **update) -> "SteadyField2D":
        fields = {"u": self.u.copy(), "phi": self.phi.copy(), "phi_x0": self.phi_x0.copy(), "omega": self.omega}
        fields.update(update)
        return SteadyField2D(**fields)

    def synthesize(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """u(x, Y) and phi(x, Y) on the given transverse points, shape (len(Y), N)."""
        basis = np.cos(np.outer(Y, np.arange(self.M + 1)))
        return basis @ self.u, basis @ self.phi

    def check_symmetry(self, tol: float = 1e-10):
        for n in range(self.M + 1):
            check_parity(self.u[n], Parity.EVEN, tol, name=f"u_{n}")
            check_parity(self.phi[n], Parity.ODD, tol, name=f"phi_{n}")


class SteadyResidual(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    r_u: np.ndarray
    r_phi: np.ndarray
    norm: float


class BranchSample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    s: float
    field: SteadyField2D
    residual: float


class SolitonBranch(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    samples: list[BranchSample] = Field(default_factory=list)
    omega0: float
    eigen_u: np.ndarray
    eigen_phi: np.ndarray
    params: Params
    grid_metadata: dict
    truncated: bool = False

    @property
    def s_values(self) -> np.ndarray:
        return np.array([sample.s for sample in self.samples])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([sample.field.omega for sample in self.samples])

    def fit_frequency(self, degree: int = 4) -> tuple[float, float]:
        """Least-squares (a, b) in omega(s) - omega0 = a s + b s^2 + ... + c s^degree.

        Powers above 2 keep the s^4 term of the branch out of a; the degree is
        capped by the number of nonzero samples.
        """
        s = self.s_values
        scale = float(np.max(np.abs(s))) or 1.0
        degree = max(2, min(degree, int(np.count_nonzero(s))))
        design = np.column_stack([(s / scale) ** p for p in range(1, degree + 1)])
        coeffs, *_ = np.linalg.lstsq(design, self.omegas - self.omega0, rcond=None)
        return float(coeffs[0] / scale), float(coeffs[1] / scale**2)


# ── Transverse transforms ─────────────────────────────────────────


def transverse_points(M: int) -> int:
    """Y-grid size on which cubic products of degree-M series are projected without aliasing."""
    return 4 * M + 2


def fourier_synthesis_matrix(M: int) -> np.ndarray:
    K = transverse_points(M)
    Y = 2.0 * np.pi * np.arange(K) / K
    return np.cos(np.outer(Y, np.arange(M + 1)))


def fourier_analysis_matrix(M: int) -> np.ndarray:
    K = transverse_points(M)
    analysis = 2.0 * fourier_synthesis_matrix(M).T / K
    analysis[0] *= 0.5
    return analysis


class _Transforms:
    def __init__(self, M: int):
        self.synthesis = fourier_synthesis_matrix(M)
        self.analysis = fourier_analysis_matrix(M)
        self.modes = np.arange(M + 1)


# ── Residual ──────────────────────────────────────────────────────


def mean_square(u: np.ndarray) -> np.ndarray:
    """Mode-0 coefficient of u(x, Y)^2."""
    return u[0] ** 2 + 0.5 * np.sum(u[1:] ** 2, axis=0)


def _mode_fluxes(field: SteadyField2D, grid: Grid1D) -> np.ndarray:
    """q_n: phi_0x for n = 0, the Dirichlet derivative of phi_n otherwise."""
    q = field.phi @ grid.D1_dirichlet.T
    q[0] = field.phi_x0
    return q


def steady_residual(field: SteadyField2D, grid: Grid1D, params: Params) -> SteadyResidual:
    """Cosine-mode residuals of both steady equations; r_phi[0] is phi_0x - [u^2]_0."""
    tf = _Transforms(field.M)
    g1, g2, g3 = params.gamma1, params.gamma2, params.gamma3
    n2w2 = (tf.modes * field.omega) ** 2

    U = tf.synthesis @ field.u
    Q = tf.synthesis @ _mode_fluxes(field, grid)
    cubic = tf.analysis @ ((g1 * U**2 + g2 * Q) * U)
    square = tf.analysis @ (U**2)

    r_u = -field.u @ grid.D2.T + field.u + n2w2[:, None] * field.u - cubic
    r_phi = -g3 * field.phi @ grid.D2.T + g3 * square @ grid.D1_dirichlet.T + n2w2[:, None] * field.phi
    r_phi[0] = field.phi_x0 - square[0]

    norm = float(np.sqrt(np.sum(grid.weights * r_u**2) + np.sum(grid.weights * r_phi**2)))
    return SteadyResidual(r_u=r_u, r_phi=r_phi, norm=norm)


# ── Base state and tangent ────────────────────────────────────────


def line_soliton_field(grid: Grid1D, M: int, omega: float, polish: bool = True, tol: float = 1e-13) -> SteadyField2D:
    """The line soliton (sech, tanh) as a steady field.

    With ``polish`` the mode-0 profile is corrected to the exact equilibrium of
    the discrete equations u - D2 u - 2 u^3 = 0.
    """
    u0 = sech(grid.nodes)
    if polish:
        basis = grid.parity_basis(Parity.EVEN)
        eye = np.eye(grid.N)
        for _ in range(20):
            res = -grid.D2 @ u0 + u0 - 2.0 * u0**3
            if np.sqrt(np.sum(grid.weights * res**2)) < tol:
                break
            jac = -grid.D2 + eye - 6.0 * np.diag(u0**2)
            u0 = u0 - basis @ np.linalg.solve(basis.T @ jac @ basis, basis.T @ res)

    u = np.zeros((M + 1, grid.N))
    phi = np.zeros((M + 1, grid.N))
    u[0] = u0
    phi_x0 = u0**2
    phi[0] = grid.antiderivative(phi_x0)
    return SteadyField2D(u=u, phi=phi, phi_x0=phi_x0, omega=omega)


def base_eigenfield(base: SteadyField2D, grid: Grid1D, params: Params) -> Omega0Result:
    """omega0 and the A1 eigenfield linearized about the (discrete) base profile."""
    eigenvalue, u1, phi = lowest_A1_eigenpair(grid, params, profile=base.u[0])
    return Omega0Result(omega0=float(np.sqrt(-eigenvalue)), eigenvalue=eigenvalue, u1=u1, phi=phi)


def amplitude(field: SteadyField2D, eigen: Omega0Result, grid: Grid1D, params: Params) -> float:
    """Weighted projection of the first Fourier mode onto the A1 eigenfield."""
    w = grid.weights
    return float(np.sum(w * field.u[1] * eigen.u1) + params.phi_weight * np.sum(w * field.phi[1] * eigen.phi))


def predictor(base: SteadyField2D, eigen: Omega0Result, s: float) -> SteadyField2D:
    """base + s cos(Y) (u1, phi) at omega = omega0."""
    field = base.copy_with(omega=eigen.omega0)
    field.u[1] += s * eigen.u1
    field.phi[1] += s * eigen.phi
    return field


# ── Newton ────────────────────────────────────────────────────────


class _ModeSystem:
    """Mode-diagonal Jacobian blocks at one iterate, in parity-basis coordinates.

    Mode 0 carries u_0 only (phi_0x is eliminated), modes n >= 1 carry
    (u_n, phi_n), and mode 1 is bordered with the omega column and the
    amplitude row. Couplings between modes are O(s) and are left to the
    outer iteration.
    """

    def __init__(self, field: SteadyField2D, grid: Grid1D, params: Params, eigen: Omega0Result):
        g1, g2, g3 = params.gamma1, params.gamma2, params.gamma3
        M, omega = field.M, field.omega
        half = grid.N // 2
        pe, po = grid.parity_basis(Parity.EVEN), grid.parity_basis(Parity.ODD)
        tf = _Transforms(M)
        self.M, self.half, self.pe, self.po = M, half, pe, po

        U = tf.synthesis @ field.u
        Q = tf.synthesis @ _mode_fluxes(field, grid)
        G = 3.0 * g1 * U**2 + g2 * Q
        # [G cos(nY)]_n and [U cos(nY)]_n on the first half of the nodes
        G_nn = np.einsum("nj,jn,jx->nx", tf.analysis, tf.synthesis, G[:, :half])
        E_nn = np.einsum("nj,jn,jx->nx", tf.analysis, tf.synthesis, U[:, :half])
        u_half = field.u[:, :half]

        stiff_u = pe.T @ (-grid.D2 + np.eye(grid.N)) @ pe
        stiff_phi = po.T @ (-g3 * grid.D2) @ po
        dd_eo = pe.T @ grid.D1_dirichlet @ po
        dd_oe = po.T @ grid.D1_dirichlet @ pe
        eye = np.eye(half)

        # phi_0x = [u^2]_0 contributes 2 g2 u_0^2 to the mode-0 potential
        blocks = [stiff_u - np.diag(G_nn[0] + 2.0 * g2 * u_half[0] ** 2)]
        for n in range(1, M + 1):
            shift = (n * omega) ** 2 * eye
            blocks.append(
                np.block(
                    [
                        [stiff_u + shift - np.diag(G_nn[n] + g2 * u_half[n] ** 2), -g2 * E_nn[n][:, None] * dd_eo],
                        [2.0 * g3 * dd_oe * E_nn[n][None, :], stiff_phi + shift],
                    ]
                )
            )

        w = grid.weights
        bordered = np.zeros((2 * half + 1, 2 * half + 1))
        bordered[:-1, :-1] = blocks[1]
        bordered[:half, -1] = 2.0 * omega * (field.u[1] @ pe)
        bordered[half:-1, -1] = 2.0 * omega * (field.phi[1] @ po)
        bordered[-1, :half] = (w * eigen.u1) @ pe
        bordered[-1, half:-1] = params.phi_weight * (w * eigen.phi) @ po
        blocks[1] = bordered

        self.factors = [lu_factor(block, check_finite=False) for block in blocks]
        self.condition = _condition_number(bordered, self.factors[1])

    def step(self, residual: SteadyResidual, gap: float) -> tuple[np.ndarray, np.ndarray, float]:
        """Corrections (du, dphi, domega) for the given residual and amplitude gap."""
        half, pe, po = self.half, self.pe, self.po
        du = np.zeros((self.M + 1, pe.shape[0]))
        dphi = np.zeros_like(du)
        du[0] = pe @ lu_solve(self.factors[0], -(residual.r_u[0] @ pe), check_finite=False)
        domega = 0.0
        for n in range(1, self.M + 1):
            rhs = np.concatenate([residual.r_u[n] @ pe, residual.r_phi[n] @ po])
            if n == 1:
                rhs = np.append(rhs, gap)
            solution = lu_solve(self.factors[n], -rhs, check_finite=False)
            du[n] = pe @ solution[:half]
            dphi[n] = po @ solution[half : 2 * half]
            if n == 1:
                domega = float(solution[-1])
        return du, dphi, domega


def _condition_number(J: np.ndarray, lu) -> float:
    anorm = float(np.linalg.norm(J, 1))
    rcond, info = dgecon(lu[0], anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return float("inf")
    return 1.0 / rcond


def newton_correct(
    field: SteadyField2D,
    s_target: float,
    grid: Grid1D,
    params: Params,
    eigen: Omega0Result,
    tol: float = 1e-10,
    max_iterations: int = 60,
    max_condition: float = 1e12,
    start_limit: float = 1e-2,
) -> SteadyField2D:
    """Newton iteration on (mode fields, omega) with the amplitude constraint.

    Each step solves the mode-diagonal blocks of the Jacobian at the current
    iterate (:class:`_ModeSystem`); the iteration contracts at a rate of order s.

    Raises:
        PreconditionError: if the starting residual exceeds ``start_limit``.
        ConditioningError: if the bordered mode-1 block condition number exceeds ``max_condition``.
        ConvergenceError: if the residual is not below ``tol`` after ``max_iterations``.
    """
    current = field.copy_with()
    current.phi_x0 = mean_square(current.u)
    current.phi[0] = grid.antiderivative(current.phi_x0)
    residual = steady_residual(current, grid, params)
    if residual.norm > start_limit:
        raise PreconditionError(f"starting residual {residual.norm:.3e} exceeds {start_limit}")

    for iteration in range(max_iterations + 1):
        gap = amplitude(current, eigen, grid, params) - s_target
        if residual.norm < tol and abs(gap) < 1e-12:
            current.iterations = iteration
            logger.debug("newton_converged", s=s_target, iterations=iteration, residual=residual.norm)
            return current
        if iteration == max_iterations:
            break

        system = _ModeSystem(current, grid, params, eigen)
        if system.condition > max_condition:
            raise ConditioningError(
                f"bordered Jacobian condition number {system.condition:.3e} exceeds {max_condition:.1e}"
            )
        du, dphi, domega = system.step(residual, gap)

        updated = current.copy_with(omega=current.omega + domega)
        updated.u += du
        updated.phi[1:] += dphi[1:]
        updated.phi_x0 = mean_square(updated.u)
        updated.phi[0] = grid.antiderivative(updated.phi_x0)
        current = updated

        residual = steady_residual(current, grid, params)
        if not np.isfinite(residual.norm) or residual.norm > 1e3:
            raise ConvergenceError(f"Newton diverged at s = {s_target} (residual {residual.norm:.3e})")
        logger.debug("newton_step", s=s_target, iteration=iteration + 1, residual=residual.norm, omega=current.omega)

    raise ConvergenceError(
        f"Newton did not converge within {max_iterations} iterations at s = {s_target} "
        f"(residual {residual.norm:.3e})"
    )


# ── Path following ────────────────────────────────────────────────


def continue_branch(
    s_max: float,
    ds: float,
    grid: Grid1D,
    params: Params,
    M: int = 16,
    tol: float = 1e-10,
    max_iterations: int = 60,
    max_condition: float = 1e12,
) -> SolitonBranch:
    """Follow the branch from the line soliton (s = 0) to s_max in steps of ds.

    A failed step is retried once through the midpoint; if that fails too the
    branch is returned up to the last converged sample with ``truncated`` set.
    """
    if not 0 < ds <= s_max:
        raise PreconditionError(f"need 0 < ds <= s_max (got ds={ds}, s_max={s_max})")
    if M < 8:
        raise PreconditionError("M must be at least 8")

    base = line_soliton_field(grid, M, omega=1.0)
    eigen = base_eigenfield(base, grid, params)
    base.omega = eigen.omega0

    branch = SolitonBranch(
        omega0=eigen.omega0,
        eigen_u=eigen.u1,
        eigen_phi=eigen.phi,
        params=params,
        grid_metadata=grid.metadata(),
    )
    branch.samples.append(BranchSample(s=0.0, field=base, residual=steady_residual(base, grid, params).norm))

    steps = int(round(s_max / ds))
    targets = [min(ds * (j + 1), s_max) for j in range(steps)]
    if targets[-1] < s_max:
        targets.append(s_max)

    def guess(target: float) -> SteadyField2D:
        samples = branch.samples
        if len(samples) < 3:
            return predictor(base, eigen, target)
        prev, last = samples[-2], samples[-1]
        ratio = (target - last.s) / (last.s - prev.s)
        extrapolated = last.field.copy_with(omega=last.field.omega + ratio * (last.field.omega - prev.field.omega))
        extrapolated.u += ratio * (last.field.u - prev.field.u)
        extrapolated.phi += ratio * (last.field.phi - prev.field.phi)
        extrapolated.phi_x0 += ratio * (last.field.phi_x0 - prev.field.phi_x0)
        return extrapolated

    def correct(target: float) -> SteadyField2D:
        return newton_correct(
            guess(target), target, grid, params, eigen, tol=tol,
            max_iterations=max_iterations, max_condition=max_condition,
        )

    def record(target: float, field: SteadyField2D):
        certified = steady_residual(field, grid, params).norm
        branch.samples.append(BranchSample(s=target, field=field, residual=certified))
        logger.info("branch_sample", s=target, omega=field.omega, residual=certified, iterations=field.iterations)

    for target in targets:
        try:
            record(target, correct(target))
            continue
        except (ConvergenceError, PreconditionError) as e:
            logger.warning("branch_step_failed", s=target, error=str(e))

        midpoint = 0.5 * (branch.samples[-1].s + target)
        try:
            record(midpoint, correct(midpoint))
            record(target, correct(target))
        except (ConvergenceError, PreconditionError) as e:
            logger.error("branch_truncated", s=branch.samples[-1].s, error=str(e))
            branch.truncated = True
            break

    return branch


# ── Serialization ─────────────────────────────────────────────────


def branch_to_json(branch: SolitonBranch) -> dict:
    return {
        "params": branch.params.model_dump(),
        "grid": branch.grid_metadata,
        "omega0": branch.omega0,
        "truncated": branch.truncated,
        "eigenfield": {"u": branch.eigen_u.tolist(), "phi": branch.eigen_phi.tolist()},
        "samples": [
            {
                "s": sample.s,
                "omega": sample.field.omega,
                "u_modes": sample.field.u.tolist(),
                "phi_modes": sample.field.phi.tolist(),
                "phi_x0": sample.field.phi_x0.tolist(),
                "residual": sample.residual,
            }
            for sample in branch.samples
        ],
    }


def branch_from_json(doc: dict, grid: Optional[Grid1D] = None) -> SolitonBranch:
    meta = doc["grid"]
    if grid is None:
        grid = build_grid(meta["Lx"], meta["N"], Scheme(meta["scheme"]))
    samples = []
    for item in doc["samples"]:
        field = SteadyField2D(
            u=np.asarray(item["u_modes"], dtype=float),
            phi=np.asarray(item["phi_modes"], dtype=float),
            phi_x0=np.asarray(item["phi_x0"], dtype=float),
            omega=float(item["omega"]),
        )
        samples.append(BranchSample(s=float(item["s"]), field=field, residual=float(item["residual"])))
    return SolitonBranch(
        samples=samples,
        omega0=float(doc["omega0"]),
        eigen_u=np.asarray(doc["eigenfield"]["u"], dtype=float),
        eigen_phi=np.asarray(doc["eigenfield"]["phi"], dtype=float),
        params=Params(**doc["params"]),
        grid_metadata=grid.metadata(),
        truncated=bool(doc.get("truncated", False)),
    )
