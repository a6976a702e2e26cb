"""Spatial-dynamics operator L, its resolvent along the imaginary axis, and the
zero-mode solve at the origin.

State vectors are ordered (u1, v1, u2, v2, phi, psi). The linearization is

    L w = (v1, A11 u1 + A12 phi, v2, A2 u2, psi, A21 u1 + A22 phi)

with the A1 blocks from :mod:`operators`. ``(L - ik) w = w_dag`` decouples into
``(A1 + k^2)(u1, phi) = (v1_dag + ik u1_dag, psi_dag + ik phi_dag)`` and
``(A2 + k^2) u2 = v2_dag + ik u2_dag``.
"""

from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import lu_factor, lu_solve

from ..errors import NearSingularError, ParityError, PreconditionError
from ..models import Params
from ..utils.logger import get_logger
from .grid import Grid1D, Parity, ParityTag, check_parity, parity_project, reflect
from .operators import A1_blocks, LinOp, assemble_A1, assemble_A2, compute_omega0, sech

logger = get_logger("resolvent")

ROLES = ("u1", "v1", "u2", "v2", "phi", "psi")
PARITIES = (Parity.EVEN, Parity.EVEN, Parity.EVEN, Parity.EVEN, Parity.ODD, Parity.ODD)
REVERSER_SIGNS = (1.0, -1.0, 1.0, -1.0, 1.0, -1.0)


class StateVector(BaseModel):
    """Six grid fields of the spatial-dynamics phase space.

    ``phi_x`` is set for star-decay states whose phi does not vanish at the
    boundary; otherwise the derivative is taken from phi.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    u1: np.ndarray
    v1: np.ndarray
    u2: np.ndarray
    v2: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    phi_x: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, N: int, dtype=float) -> "StateVector":
        return cls(**{role: np.zeros(N, dtype=dtype) for role in ROLES})

    @classmethod
    def from_stacked(cls, vec: np.ndarray) -> "StateVector":
        return cls(**dict(zip(ROLES, np.split(np.asarray(vec), 6))))

    @classmethod
    def random(cls, grid: Grid1D, rng: np.random.Generator, symmetric: bool = True, complex_valued: bool = False) -> "StateVector":
        """Smooth random state, localized by a sech envelope."""
        envelope = sech(grid.nodes / 2.0)
        fields = {}
        for role, parity in zip(ROLES, PARITIES):
            coeffs = rng.standard_normal(4)
            profile = sum(c * np.cos((j + 1) * grid.nodes / 3.0 + j) for j, c in enumerate(coeffs))
            field = envelope * profile
            if complex_valued:
                field = field + 1j * envelope * np.sin(rng.standard_normal() * grid.nodes)
            fields[role] = parity_project(field, parity) if symmetric else field
        return cls(**fields)

    def fields(self) -> list[np.ndarray]:
        return [getattr(self, role) for role in ROLES]

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.fields())

    def derivative_phi(self, grid: Grid1D) -> np.ndarray:
        return self.phi_x if self.phi_x is not None else grid.D1 @ self.phi

    def check_parities(self, tol: float = 1e-12):
        for role, parity in zip(ROLES, PARITIES):
            check_parity(getattr(self, role), parity, tol, name=role)
        if self.phi_x is not None:
            check_parity(self.phi_x, Parity.EVEN, tol, name="phi_x")

    def norm(self, grid: Grid1D) -> float:
        return float(np.sqrt(sum(np.sum(grid.weights * np.abs(f) ** 2) for f in self.fields())))


class ResolventSolve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    k: float
    solution: StateVector
    residual: float


class NormScanPoint(BaseModel):
    """Resolvent norms at ik; ``grid_*`` are the values on the grid alone."""

    k: float
    opnorm_XX: float
    opnorm_XD: float
    grid_XX: float
    grid_XD: float


def reverser(w: StateVector) -> StateVector:
    """S(u1, v1, u2, v2, phi, psi) = (u1, -v1, u2, -v2, phi, -psi)."""
    return StateVector(**{role: sign * f for role, sign, f in zip(ROLES, REVERSER_SIGNS, w.fields())})


def reflection(w: StateVector) -> StateVector:
    """R: u and v fields reflect, phi and psi reflect with a sign change."""
    signs = (1.0, 1.0, 1.0, 1.0, -1.0, -1.0)
    return StateVector(**{role: sign * reflect(f) for role, sign, f in zip(ROLES, signs, w.fields())})


def reverser_matrix(N: int) -> np.ndarray:
    return np.diag(np.repeat(REVERSER_SIGNS, N))


def assemble_L(grid: Grid1D, params: Params) -> LinOp:
    a11, a12, a21, a22 = A1_blocks(grid, params)
    a2 = assemble_A2(grid, params).matrix
    N = grid.N
    eye = np.eye(N)
    zero = np.zeros((N, N))
    matrix = np.block(
        [
            [zero, eye, zero, zero, zero, zero],
            [a11, zero, zero, zero, a12, zero],
            [zero, zero, zero, eye, zero, zero],
            [zero, zero, a2, zero, zero, zero],
            [zero, zero, zero, zero, zero, eye],
            [a21, zero, zero, zero, a22, zero],
        ]
    )
    return LinOp(
        matrix=matrix,
        weight=np.tile(grid.weights, 6),
        domain_tags=[ParityTag(x_parity=p) for p in PARITIES],
        block_roles=list(ROLES),
        ess_edge=float("nan"),
        grid=grid,
    )


def apply_L_star(w: StateVector, grid: Grid1D, params: Params) -> StateVector:
    """L w with phi entering only through phi_x."""
    s = sech(grid.nodes)
    q = w.derivative_phi(grid)
    a2 = -grid.D2 + np.eye(grid.N) - 2.0 * np.diag(s**2)
    v1_row = -grid.D2 @ w.u1 + w.u1 - params.c1 * s**2 * w.u1 - params.gamma2 * s * q
    psi_row = params.gamma3 * (grid.D1 @ (-q + 2.0 * s * w.u1))
    return StateVector(u1=w.v1, v1=v1_row, u2=w.v2, v2=a2 @ w.u2, phi=w.psi, psi=psi_row)


def apply_nonlinearity(w: StateVector, grid: Grid1D, params: Params) -> StateVector:
    """Quadratic and cubic part of the vector field about the line soliton."""
    g1, g2, g3 = params.gamma1, params.gamma2, params.gamma3
    s = sech(grid.nodes)
    u1, u2 = w.u1, w.u2
    q = w.derivative_phi(grid)
    zero = np.zeros_like(u1)
    v1_row = -3.0 * g1 * s * u1**2 - g1 * s * u2**2 - g2 * u1 * q - g1 * u1**3 - g1 * u1 * u2**2
    v2_row = -2.0 * g1 * s * u1 * u2 - g2 * u2 * q - g1 * u2**3 - g1 * u1**2 * u2
    psi_row = g3 * (grid.D1 @ (u1**2 + u2**2))
    return StateVector(u1=zero, v1=v1_row, u2=zero.copy(), v2=v2_row, phi=zero.copy(), psi=psi_row)


def _resolve_omega0(grid: Grid1D, params: Params, omega0: Optional[float]) -> float:
    if omega0 is not None:
        return omega0
    return compute_omega0(grid, params).omega0


def _check_distance(k: float, omega0: float, margin: float):
    if abs(k) < margin * omega0 or abs(abs(k) - omega0) < margin * omega0:
        raise NearSingularError(
            f"k = {k} lies within {margin} omega0 of the spectrum {{0, +-{omega0}}}"
        )


def solve_resolvent(
    k: float,
    rhs: StateVector,
    grid: Grid1D,
    params: Params,
    omega0: Optional[float] = None,
    singular_margin: float = 1e-3,
    L: Optional[LinOp] = None,
) -> ResolventSolve:
    """Solve (L - ik) w = rhs through the decoupled second-order systems.

    Raises:
        NearSingularError: if |k| is within ``singular_margin * omega0`` of 0 or omega0.
    """
    omega0 = _resolve_omega0(grid, params, omega0)
    _check_distance(k, omega0, singular_margin)

    N = grid.N
    ik = 1j * k
    a1 = assemble_A1(grid, params).shifted(k**2).matrix
    a2 = assemble_A2(grid, params).shifted(k**2).matrix

    rhs1 = np.concatenate([rhs.v1 + ik * rhs.u1, rhs.psi + ik * rhs.phi])
    sol1 = np.linalg.solve(a1.astype(complex), rhs1)
    u1, phi = sol1[:N], sol1[N:]
    u2 = np.linalg.solve(a2.astype(complex), rhs.v2 + ik * rhs.u2)

    w = StateVector(
        u1=u1,
        v1=rhs.u1 + ik * u1,
        u2=u2,
        v2=rhs.u2 + ik * u2,
        phi=phi,
        psi=rhs.phi + ik * phi,
    )

    L = L or assemble_L(grid, params)
    defect = L.apply(w.stacked()) - ik * w.stacked() - rhs.stacked()
    rhs_norm = L.norm(rhs.stacked())
    residual = L.norm(defect) / rhs_norm if rhs_norm > 0 else L.norm(defect)
    logger.debug("resolvent_solved", k=k, residual=residual)
    return ResolventSolve(k=k, solution=w, residual=float(residual))


def direct_resolvent_solve(k: float, rhs: StateVector, grid: Grid1D, params: Params) -> StateVector:
    """Dense solve of (L - ik) w = rhs on the full six-block system."""
    L = assemble_L(grid, params)
    system = L.matrix - 1j * k * np.eye(L.matrix.shape[0])
    return StateVector.from_stacked(np.linalg.solve(system, rhs.stacked().astype(complex)))


# ── Operator norms on the symmetric subspace with (u2, v2) = 0 ────


class _ReducedSystem:
    """L on (u1, v1, phi, psi) with parities (even, even, odd, odd) in parity-basis coordinates.

    X carries H1 x L2 x H1 x L2/gamma3 and D carries H2 x H1 x H2 x H1/gamma3,
    with ||u||_H1^2 = <u, (1 - D2) u> and ||u||_H2^2 = ||(1 - D2) u||^2. The
    maps ``to_X``, ``to_D`` send coordinates to vectors whose Euclidean norm
    is the X or D norm.
    """

    def __init__(self, grid: Grid1D, params: Params):
        pe = grid.parity_basis(Parity.EVEN)
        po = grid.parity_basis(Parity.ODD)
        a11, a12, a21, a22 = A1_blocks(grid, params)
        half = grid.N // 2
        eye = np.eye(half)
        zero = np.zeros((half, half))

        self.dim = 4 * half
        self.L = np.block(
            [
                [zero, eye, zero, zero],
                [pe.T @ a11 @ pe, zero, pe.T @ a12 @ po, zero],
                [zero, zero, zero, eye],
                [po.T @ a21 @ pe, zero, po.T @ a22 @ po, zero],
            ]
        )

        root_w = np.sqrt(grid.weights[:half])
        energy = np.eye(grid.N) - grid.D2
        spectra = {}
        for parity, basis in ((Parity.EVEN, pe), (Parity.ODD, po)):
            scaled = root_w[:, None] * (basis.T @ energy @ basis) / root_w[None, :]
            spectra[parity] = np.linalg.eigh(0.5 * (scaled + scaled.T))

        def power(parity, exponent):
            levels, vectors = spectra[parity]
            return (vectors * levels**exponent) @ vectors.T * root_w[None, :]

        def inverse_power(parity, exponent):
            levels, vectors = spectra[parity]
            return (vectors * levels**-exponent) @ vectors.T / root_w[:, None]

        g3 = params.gamma3
        plain = np.diag(root_w)
        self.to_X = _block_diag(power(Parity.EVEN, 0.5), plain, power(Parity.ODD, 0.5), plain / np.sqrt(g3))
        self.from_X = _block_diag(
            inverse_power(Parity.EVEN, 0.5),
            np.diag(1.0 / root_w),
            inverse_power(Parity.ODD, 0.5),
            np.diag(np.sqrt(g3) / root_w),
        )
        self.to_D = _block_diag(
            power(Parity.EVEN, 1.0),
            power(Parity.EVEN, 0.5),
            power(Parity.ODD, 1.0),
            power(Parity.ODD, 0.5) / np.sqrt(g3),
        )
        # largest resolved energies 1 + xi^2 of the u and phi components
        self.top_even = float(spectra[Parity.EVEN][0][-1])
        self.top_odd = float(spectra[Parity.ODD][0][-1])
        self.gamma3 = g3


def _block_diag(*blocks: np.ndarray) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    offset = 0
    for b in blocks:
        n = b.shape[0]
        out[offset : offset + n, offset : offset + n] = b
        offset += n
    return out


def operator_norm_power(
    apply: Callable[[np.ndarray], np.ndarray],
    apply_adjoint: Callable[[np.ndarray], np.ndarray],
    dim: int,
    iterations: int = 50,
    tol: float = 1e-6,
    seed: int = 0,
) -> float:
    """Largest singular value by power iteration on the normal operator."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for iteration in range(iterations):
        y = apply(x)
        new_sigma = float(np.linalg.norm(y))
        z = apply_adjoint(y)
        z_norm = np.linalg.norm(z)
        if z_norm == 0:
            return 0.0
        x = z / z_norm
        if sigma > 0 and abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    logger.debug("power_iteration", iterations=iteration + 1, sigma=sigma)
    return sigma


def high_frequency_norms(k: float, top_even: float, top_odd: float, gamma3: float, samples: int = 256) -> tuple[float, float]:
    """X->X and X->D resolvent norms of the potential-free system above the grid cutoff.

    At energies 1 + xi^2 beyond ``top_even`` (u) and ``top_odd`` (phi) the
    potentials are lower order and each Fourier mode is a 2x2 system. In X
    scaling the u block is [[0, e^1/2], [e^1/2, 0]] and the phi block is
    gamma3^1/2 [[0, e^1/2], [(e - 1) e^-1/2, 0]]; the D norm adds a factor
    e^1/2 to both components.
    """
    top = 1e12 * (1.0 + k**2)
    norms_xx, norms_xd = [], []
    blocks = (
        (top_even, 1.0, np.sqrt),
        (top_odd, np.sqrt(gamma3), lambda e: (e - 1.0) / np.sqrt(e)),
    )
    for start, scale, lower in blocks:
        e = np.geomspace(start, top, samples)
        symbol = np.zeros((samples, 2, 2), dtype=complex)
        symbol[:, 0, 1] = scale * np.sqrt(e)
        symbol[:, 1, 0] = scale * lower(e)
        symbol -= 1j * k * np.eye(2)
        sigma = np.linalg.svd(np.linalg.inv(symbol), compute_uv=False)[:, 0]
        norms_xx.append(float(np.max(sigma)))
        norms_xd.append(float(np.max(np.sqrt(e) * sigma)))
    return max(norms_xx), max(norms_xd)


def _grid_norm_pair(k: float, system: _ReducedSystem, method: str, iterations: int, tol: float, seed: int) -> tuple[float, float]:
    lu = lu_factor(system.L - 1j * k * np.eye(system.dim))
    norms = []
    for target in (system.to_X, system.to_D):
        if method == "svd":
            dense = target @ lu_solve(lu, system.from_X.astype(complex))
            norms.append(float(np.linalg.norm(dense, 2)))
        else:
            norms.append(
                operator_norm_power(
                    lambda x: target @ lu_solve(lu, system.from_X @ x),
                    lambda y: system.from_X.T @ lu_solve(lu, target.T @ y, trans=2),
                    system.dim,
                    iterations,
                    tol,
                    seed,
                )
            )
    return norms[0], norms[1]


def resolvent_norm_scan(
    k_list: Sequence[float],
    grid: Grid1D,
    params: Params,
    omega0: Optional[float] = None,
    method: str = "power",
    iterations: int = 50,
    tol: float = 1e-6,
    seed: int = 0,
) -> list[NormScanPoint]:
    """Resolvent norms X->X and X->D on the symmetric subspace with (u2, v2) = 0.

    Each norm is the larger of the value on the grid and the potential-free
    value over the frequencies the grid cannot hold (:func:`high_frequency_norms`).
    ``method`` is ``"power"`` or ``"svd"`` for the grid part; the dense SVD is
    limited to N <= 512.

    Raises:
        PreconditionError: if some |k| < 2 omega0, or SVD is requested on a large grid.
    """
    if method not in ("power", "svd"):
        raise PreconditionError(f"unknown norm method {method!r}")
    if method == "svd" and grid.N > 512:
        raise PreconditionError("dense SVD cross-check is limited to N <= 512")
    omega0 = _resolve_omega0(grid, params, omega0)
    for k in k_list:
        if abs(k) < 2.0 * omega0:
            raise PreconditionError(f"k = {k} is below 2 omega0 = {2.0 * omega0}")

    system = _ReducedSystem(grid, params)
    points = []
    for k in k_list:
        k = float(k)
        xx, xd = _grid_norm_pair(k, system, method, iterations, tol, seed)
        tail_xx, tail_xd = high_frequency_norms(k, system.top_even, system.top_odd, system.gamma3)
        point = NormScanPoint(k=k, opnorm_XX=max(xx, tail_xx), opnorm_XD=max(xd, tail_xd), grid_XX=xx, grid_XD=xd)
        points.append(point)
        logger.info("resolvent_norm", k=k, opnorm_XX=point.opnorm_XX, opnorm_XD=point.opnorm_XD, grid_XD=xd)
    return points


def fit_loglog_slope(ks: Sequence[float], values: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.abs(ks)), np.log(values), 1)
    return float(slope)


# ── Zero-mode solve at the origin ─────────────────────────────────


def solve_iooss_zero_mode(wdag: StateVector, grid: Grid1D, params: Params, tol: float = 1e-10) -> StateVector:
    """Solve L w + N(w_dag) = 0 for w = (u1, 0, 0, 0, phi, 0).

    u1 solves the c=6 Schrodinger equation on the even subspace, and phi is the
    odd antiderivative of phi_x = u1_dag^2 + 2 sech u1.

    Raises:
        PreconditionError: if (u2_dag, v2_dag) is not zero.
        ParityError: if u1_dag is not even or phi_x_dag is not even.
    """
    scale = max(1.0, float(np.max(np.abs(wdag.u1))))
    if np.max(np.abs(wdag.u2)) > tol * scale or np.max(np.abs(wdag.v2)) > tol * scale:
        raise PreconditionError("zero-mode solve needs (u2, v2) = (0, 0)")
    q_dag = wdag.derivative_phi(grid)
    check_parity(wdag.u1, Parity.EVEN, tol, name="u1_dag")
    check_parity(q_dag, Parity.EVEN, tol, name="phi_x_dag")

    g1, g2 = params.gamma1, params.gamma2
    s = sech(grid.nodes)
    u_dag = wdag.u1
    forcing = (3.0 * g1 + g2) * s * u_dag**2 + g2 * u_dag * q_dag + g1 * u_dag**3

    pe = grid.parity_basis(Parity.EVEN)
    h6 = -grid.D2 + np.eye(grid.N) - 6.0 * np.diag(s**2)
    u1 = pe @ np.linalg.solve(pe.T @ h6 @ pe, pe.T @ forcing)

    q = u_dag**2 + 2.0 * s * u1
    zero = np.zeros(grid.N)
    result = StateVector(
        u1=u1,
        v1=zero,
        u2=zero.copy(),
        v2=zero.copy(),
        phi=grid.antiderivative(q),
        psi=zero.copy(),
        phi_x=q,
    )
    try:
        result.check_parities(1e-10)
    except ParityError:
        logger.warning("zero_mode_parity_defect")
        raise
    return result


def zero_mode_residual(w: StateVector, wdag: StateVector, grid: Grid1D, params: Params) -> float:
    """Weighted L2 norm of L w + N(w_dag)."""
    lw = apply_L_star(w, grid, params)
    nw = apply_nonlinearity(wdag, grid, params)
    total = StateVector(**{role: a + b for role, a, b in zip(ROLES, lw.fields(), nw.fields())})
    return total.norm(grid)


def eigenvector_of_L(u1: np.ndarray, phi: np.ndarray, omega0: float, sign: int = 1) -> StateVector:
    """State (u1, i w u1, 0, 0, phi, i w phi) with L-eigenvalue i*sign*omega0."""
    iw = 1j * sign * omega0
    zero = np.zeros(u1.shape, dtype=complex)
    return StateVector(u1=u1 + 0j, v1=iw * u1, u2=zero, v2=zero.copy(), phi=phi + 0j, psi=iw * phi)
