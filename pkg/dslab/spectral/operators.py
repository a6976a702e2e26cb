"""Discretized self-adjoint operators of the linearization about the line soliton.

The operators are

- the Schrodinger operators ``1 - d_xx - c sech^2(x)``,
- ``A2 = 1 - d_xx - 2 sech^2`` acting on u2,
- the coupled operator ``A1`` acting on (u1, phi), which is self-adjoint in the
  inner product <u, u'> + gamma2/(2 gamma3) <phi, phi'>.

The unique negative eigenvalue -omega0^2 of A1 is the transverse bifurcation
frequency and the instability band edge.
"""

from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import integrate
from scipy.linalg import eigh

from ..errors import PreconditionError, SpectrumError
from ..models import Params, Scheme
from ..utils.logger import get_logger
from .grid import Grid1D, Parity, ParityTag, build_grid, parity_project

logger = get_logger("operators")

SubspaceSpec = Union[None, Parity, str, ParityTag, Sequence[Union[Parity, str, ParityTag]]]

LOCALIZATION_THRESHOLD = 0.99


class LinOp(BaseModel):
    """Dense block operator with the diagonal weight that makes it symmetric."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    weight: np.ndarray
    domain_tags: list[ParityTag]
    block_roles: list[str]
    ess_edge: float
    grid: Grid1D

    @property
    def n_blocks(self) -> int:
        return len(self.block_roles)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        value = np.sum(self.weight * np.conj(a) * b)
        return float(value.real) if np.isrealobj(a) and np.isrealobj(b) else complex(value)

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(np.real(np.sum(self.weight * np.abs(a) ** 2))))

    def symmetry_defect(self) -> float:
        """Relative Frobenius defect of W A from symmetry."""
        wa = self.weight[:, None] * self.matrix
        return float(np.linalg.norm(wa - wa.T) / np.linalg.norm(wa))

    def shifted(self, sigma: float) -> "LinOp":
        """Operator + sigma I; the essential-spectrum edge moves with it."""
        return self.model_copy(
            update={
                "matrix": self.matrix + sigma * np.eye(self.matrix.shape[0]),
                "ess_edge": self.ess_edge + sigma,
            }
        )

    def split(self, v: np.ndarray) -> list[np.ndarray]:
        return np.split(v, self.n_blocks)

    def subspace_basis(self, subspace: SubspaceSpec = None) -> np.ndarray:
        parities = _normalize_subspace(subspace, self.n_blocks)
        blocks = [self.grid.parity_basis(p) for p in parities]
        rows = sum(b.shape[0] for b in blocks)
        cols = sum(b.shape[1] for b in blocks)
        basis = np.zeros((rows, cols))
        r = c = 0
        for b in blocks:
            basis[r : r + b.shape[0], c : c + b.shape[1]] = b
            r += b.shape[0]
            c += b.shape[1]
        return basis

    def restricted(self, subspace: SubspaceSpec = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric Galerkin matrix of W A on a parity subspace.

        Returns (stiffness, mass, basis); ``mass`` is the diagonal of the basis Gram
        matrix in the weighted inner product.
        """
        basis = self.subspace_basis(subspace)
        stiffness = basis.T @ (self.weight[:, None] * self.matrix) @ basis
        stiffness = 0.5 * (stiffness + stiffness.T)
        mass = np.diag(basis.T @ (self.weight[:, None] * basis))
        return stiffness, mass, basis


class SpectrumResult(BaseModel):
    """Localized eigenpairs below the essential-spectrum edge."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    eigenvectors: list[np.ndarray]
    ess_edge: float
    localization: list[float]


class Omega0Result(BaseModel):
    """The negative eigenvalue -omega0^2 of A1 with its (even, odd) eigenfield."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    omega0: float
    eigenvalue: float
    u1: np.ndarray
    phi: np.ndarray
    discretization_gap: Optional[float] = None
    reference_eigenvalue: Optional[float] = None

    @property
    def eigenfield(self) -> tuple[np.ndarray, np.ndarray]:
        return self.u1, self.phi

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u1, self.phi])


def sech(x: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(x)


def _normalize_subspace(subspace: SubspaceSpec, n_blocks: int) -> list[Parity]:
    if subspace is None:
        return [Parity.FULL] * n_blocks
    if isinstance(subspace, (Parity, str, ParityTag)):
        subspace = [subspace] * n_blocks
    parities = [s.x_parity if isinstance(s, ParityTag) else Parity(s) for s in subspace]
    if len(parities) != n_blocks:
        raise PreconditionError(f"subspace has {len(parities)} blocks, operator has {n_blocks}")
    return parities


def assemble_schrodinger(grid: Grid1D, c: float) -> LinOp:
    """u -> u - u_xx - c sech^2(x) u with the plain quadrature weight."""
    potential = c * sech(grid.nodes) ** 2
    matrix = -grid.D2 + np.diag(1.0 - potential)
    return LinOp(
        matrix=matrix,
        weight=grid.weights.copy(),
        domain_tags=[ParityTag(x_parity=Parity.FULL)],
        block_roles=["u"],
        ess_edge=1.0,
        grid=grid,
    )


def assemble_A2(grid: Grid1D, params: Params) -> LinOp:
    op = assemble_schrodinger(grid, 2.0)
    return op.model_copy(update={"domain_tags": [ParityTag.even()], "block_roles": ["u2"]})


def A1_blocks(
    grid: Grid1D, params: Params, profile: Optional[np.ndarray] = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four N x N blocks of A1 acting on (u1, phi).

    ``profile`` replaces sech(x) as the base state, e.g. by the discrete line
    soliton of a finite-difference grid.
    """
    s = sech(grid.nodes) if profile is None else profile
    eye = np.eye(grid.N)
    a11 = -grid.D2 + eye - params.c1 * np.diag(s**2)
    a12 = -params.gamma2 * (s[:, None] * grid.D1_dirichlet)
    a21 = 2.0 * params.gamma3 * (grid.D1_dirichlet * s[None, :])
    a22 = -params.gamma3 * grid.D2
    return a11, a12, a21, a22


def assemble_A1(grid: Grid1D, params: Params, profile: Optional[np.ndarray] = None) -> LinOp:
    """A1(u1, phi) = (-u1xx + u1 - (3g1+g2) sech^2 u1 - g2 sech phi_x,
    -g3 phi_xx + 2 g3 (sech u1)_x)."""
    a11, a12, a21, a22 = A1_blocks(grid, params, profile)
    matrix = np.block([[a11, a12], [a21, a22]])
    weight = np.concatenate([grid.weights, params.phi_weight * grid.weights])
    return LinOp(
        matrix=matrix,
        weight=weight,
        domain_tags=[ParityTag.even(), ParityTag.odd()],
        block_roles=["u1", "phi"],
        ess_edge=0.0,
        grid=grid,
    )


def compute_point_spectrum(
    op: LinOp,
    subspace: SubspaceSpec = None,
    count: Optional[int] = 1,
    edge_tol: float = 1e-8,
    localization_threshold: float = LOCALIZATION_THRESHOLD,
) -> SpectrumResult:
    """Lowest localized eigenpairs of ``op`` strictly below its essential edge.

    Eigenvalues that sit below the edge but whose eigenvector spreads over the
    truncated box are discretized continuum and are dropped.

    Raises:
        SpectrumError: if fewer than ``count`` localized eigenvalues are found.
    """
    stiffness, mass, basis = op.restricted(subspace)
    scale = 1.0 / np.sqrt(mass)
    values, vectors = eigh(scale[:, None] * stiffness * scale[None, :])

    grid = op.grid
    inner_nodes = np.tile(np.abs(grid.nodes) <= grid.Lx / 2.0, op.n_blocks)

    kept_values, kept_vectors, kept_local = [], [], []
    for value, y in zip(values, vectors.T):
        if value >= op.ess_edge - edge_tol:
            break
        v = basis @ (scale * y)
        mass_density = op.weight * v**2
        localization = float(mass_density[inner_nodes].sum() / mass_density.sum())
        if localization < localization_threshold:
            continue
        pivot = int(np.argmax(np.abs(v)))
        if v[pivot] < 0:
            v = -v
        kept_values.append(float(value))
        kept_vectors.append(v)
        kept_local.append(localization)
        if count is not None and len(kept_values) == count:
            break

    if count is not None and len(kept_values) < count:
        raise SpectrumError(
            f"requested {count} localized eigenvalues below {op.ess_edge}, "
            f"found {len(kept_values)}"
        )

    logger.debug(
        "point_spectrum",
        roles=op.block_roles,
        eigenvalues=kept_values,
        localization=kept_local,
    )
    return SpectrumResult(
        eigenvalues=np.array(kept_values),
        eigenvectors=kept_vectors,
        ess_edge=op.ess_edge,
        localization=kept_local,
    )


def negative_eigenvalue_count(op: LinOp, subspace: SubspaceSpec = None, threshold: float = 1e-6) -> int:
    """Number of localized eigenvalues below -threshold."""
    spectrum = compute_point_spectrum(op, subspace, count=None, edge_tol=threshold)
    return int(np.sum(spectrum.eigenvalues < -threshold))


def lowest_A1_eigenpair(
    grid: Grid1D, params: Params, profile: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray, np.ndarray]:
    op = assemble_A1(grid, params, profile)
    spectrum = compute_point_spectrum(op, [Parity.EVEN, Parity.ODD], count=1)
    u1, phi = op.split(spectrum.eigenvectors[0])
    # u1 positive at the centre
    if u1[grid.N // 2] < 0:
        u1, phi = -u1, -phi
    return float(spectrum.eigenvalues[0]), u1, phi


def richardson_extrapolate(values: Sequence[float], hs: Sequence[float], orders: Sequence[int] = (2, 4)) -> float:
    """Eliminate the leading h^p error terms from a sequence of approximations."""
    values = np.asarray(values, dtype=float)
    hs = np.asarray(hs, dtype=float)
    orders = list(orders)[: len(values) - 1]
    design = np.column_stack([np.ones_like(hs)] + [hs**p for p in orders])
    coeffs, *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(coeffs[0])


def finite_difference_omega0_squared(Lx: float, levels: Sequence[int], params: Params) -> float:
    """Richardson-extrapolated -omega0^2 from second-order finite differences."""
    values, hs = [], []
    for n in levels:
        fd = build_grid(Lx, n, Scheme.FINITE_DIFFERENCE)
        eigenvalue, _, _ = lowest_A1_eigenpair(fd, params)
        values.append(eigenvalue)
        hs.append(2.0 * Lx / (n - 1))
        logger.debug("fd_level", N=n, eigenvalue=eigenvalue)
    return richardson_extrapolate(values, hs)


def compute_omega0(
    grid: Grid1D,
    params: Params,
    cross_check: bool = False,
    fd_levels: Optional[Sequence[int]] = None,
) -> Omega0Result:
    """omega0 and the A1 eigenfield on ``grid``.

    With ``cross_check`` the eigenvalue is recomputed by the other scheme
    (Richardson-extrapolated finite differences when ``grid`` is spectral,
    a Fourier grid of the same size otherwise) and the gap is recorded.
    """
    eigenvalue, u1, phi = lowest_A1_eigenpair(grid, params)
    if eigenvalue >= 0:
        raise SpectrumError(f"A1 has no negative eigenvalue on this grid ({eigenvalue})")

    gap = reference = None
    if cross_check:
        if grid.scheme == Scheme.FOURIER:
            levels = fd_levels or (grid.N, 2 * grid.N, 4 * grid.N)
            reference = finite_difference_omega0_squared(grid.Lx, levels, params)
        else:
            reference, _, _ = lowest_A1_eigenpair(build_grid(grid.Lx, grid.N, Scheme.FOURIER), params)
        gap = abs(eigenvalue - reference)

    omega0 = float(np.sqrt(-eigenvalue))
    logger.info("omega0_computed", omega0=omega0, eigenvalue=eigenvalue, gap=gap, **grid.metadata())
    return Omega0Result(
        omega0=omega0,
        eigenvalue=eigenvalue,
        u1=u1,
        phi=phi,
        discretization_gap=gap,
        reference_eigenvalue=reference,
    )


# ── Quadratic form of A1 ──────────────────────────────────────────


def quadratic_form_A1(u1: np.ndarray, phi: np.ndarray, grid: Grid1D, params: Params) -> float:
    """<A1 (u1, phi), (u1, phi)> in the weighted inner product, from the assembled blocks."""
    a11, a12, a21, a22 = A1_blocks(grid, params)
    r1 = a11 @ u1 + a12 @ phi
    r2 = a21 @ u1 + a22 @ phi
    w = grid.weights
    return float(np.sum(w * r1 * u1) + params.phi_weight * np.sum(w * r2 * phi))


def quadratic_form_identity_rhs(u1: np.ndarray, phi: np.ndarray, grid: Grid1D, params: Params) -> float:
    """<u1 - u1_xx - 6 sech^2 u1, u1> + (gamma2/2) int (phi_x - 2 sech u1)^2 dx."""
    h6 = assemble_schrodinger(grid, 6.0)
    s = sech(grid.nodes)
    first = h6.inner(u1, h6.apply(u1))
    flux = grid.D1_dirichlet @ phi - 2.0 * s * u1
    return float(first + 0.5 * params.gamma2 * np.sum(grid.weights * flux**2))


def _glue(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _glue_derivative(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def cutoff(x: np.ndarray) -> np.ndarray:
    """Smooth bump: 1 on [-1, 1], 0 outside [-2, 2]."""
    t = 2.0 - np.abs(np.asarray(x, dtype=float))
    a, b = _glue(t), _glue(1.0 - t)
    return a / (a + b)


def cutoff_derivative(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t = 2.0 - np.abs(x)
    a, b = _glue(t), _glue(1.0 - t)
    da, db = _glue_derivative(t), _glue_derivative(1.0 - t)
    dg_dt = (da * b + a * db) / (a + b) ** 2
    return -np.sign(x) * dg_dt


def cutoff_energy() -> float:
    """int chi'(t)^2 dt over the real line."""
    value, _ = integrate.quad(lambda t: float(cutoff_derivative(np.array([t]))[0] ** 2), 1.0, 2.0, limit=200)
    return 2.0 * value


def cutoff_correction(R: float, params: Params) -> float:
    """Cutoff contribution separating the trial-family form value from -16/3."""
    return 2.0 * params.gamma2 * cutoff_energy() / R


def trial_pair(R: float, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """(sech(x), 2 chi(x/R) tanh(x))."""
    x = grid.nodes
    return sech(x), 2.0 * cutoff(x / R) * np.tanh(x)


def form_limit_scan(R_list: Sequence[float], grid: Grid1D, params: Params) -> list[float]:
    """Quadratic form of A1 on the trial family; tends to -16/3 as R grows.

    Raises:
        PreconditionError: if an R is not positive, the list is not increasing,
            or the cutoff support 2R leaves the grid.
    """
    R_values = [float(R) for R in R_list]
    if any(R <= 0 for R in R_values):
        raise PreconditionError("R values must be positive")
    if any(b <= a for a, b in zip(R_values, R_values[1:])):
        raise PreconditionError("R values must be strictly increasing")
    if R_values and 2.0 * R_values[-1] > grid.Lx:
        raise PreconditionError(
            f"cutoff support 2R = {2.0 * R_values[-1]} exceeds Lx = {grid.Lx}"
        )

    values = []
    for R in R_values:
        u1, phi = trial_pair(R, grid)
        values.append(quadratic_form_A1(u1, phi, grid, params))
    logger.info("form_limit_scan", R=R_values, values=values, limit=-16.0 / 3.0)
    return values


def even_odd_pair(u1: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return parity_project(u1, Parity.EVEN), parity_project(phi, Parity.ODD)
