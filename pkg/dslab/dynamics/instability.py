"""Transverse growth rates of the line soliton.

A perturbation e^{lambda t} cos(kappa y) (u1, phi, u2) of the line soliton solves

    (A11 + k^2) u1 + A12 phi + lambda u2 = 0
    A21 u1 + (A22 + k^2) phi = 0
    (A2 + k^2) u2 - lambda u1 = 0.

Eliminating phi and u2 leaves the symmetric pencil S(k) u1 = mu G u1 with
G = (A2 + k^2)^-1 positive definite and mu = -lambda^2.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import cho_factor, cho_solve, eigh

from ..errors import DSLabError, NoInstabilityError, PreconditionError
from ..models import Params
from ..spectral.grid import Grid1D, Parity, ParityTag
from ..spectral.operators import A1_blocks, LinOp, assemble_A2, compute_omega0
from ..utils.logger import get_logger

logger = get_logger("instability")


class GrowthMode(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    u1: np.ndarray
    phi: np.ndarray
    u2: np.ndarray


class GrowthPoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kappa: float
    lam: Optional[float] = None
    mode: Optional[GrowthMode] = None
    residual: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class GrowthCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    points: list[GrowthPoint] = Field(default_factory=list)
    omega0: float

    def successful(self) -> list[GrowthPoint]:
        return [p for p in self.points if p.ok]

    def rows(self) -> list[tuple[float, float, float]]:
        return [(p.kappa, p.lam, p.residual) for p in self.successful()]


def _phi_factor(kappa: float, grid: Grid1D, params: Params):
    """Cholesky factor of W (kappa^2 - g3 D2), the weighted shifted phi block."""
    shifted = kappa**2 * np.eye(grid.N) - params.gamma3 * grid.D2
    return cho_factor(grid.weights[:, None] * shifted)


def schur_S(kappa: float, grid: Grid1D, params: Params) -> LinOp:
    """Schur complement of A1 + kappa^2 with respect to its phi block.

    Raises:
        PreconditionError: if kappa <= 0.
    """
    if kappa <= 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    a11, a12, a21, _ = A1_blocks(grid, params)
    eliminated = cho_solve(_phi_factor(kappa, grid, params), grid.weights[:, None] * a21)
    matrix = a11 + kappa**2 * np.eye(grid.N) - a12 @ eliminated
    return LinOp(
        matrix=matrix,
        weight=grid.weights.copy(),
        domain_tags=[ParityTag.even()],
        block_roles=["u1"],
        ess_edge=1.0 + kappa**2,
        grid=grid,
    )


def _check_band(kappa: float, omega0: float, margin: float):
    if kappa < margin * omega0 or kappa > omega0 * (1.0 - margin) + 1e-12:
        raise PreconditionError(
            f"kappa = {kappa} outside the open band (0, {omega0}) with relative margin {margin}"
        )


def unreduced_residual(kappa: float, lam: float, mode: GrowthMode, grid: Grid1D, params: Params) -> float:
    """Relative residual of the linear system before elimination."""
    a11, a12, a21, a22 = A1_blocks(grid, params)
    a2 = assemble_A2(grid, params).matrix
    k2 = kappa**2
    r1 = a11 @ mode.u1 + k2 * mode.u1 + a12 @ mode.phi + lam * mode.u2
    r2 = a21 @ mode.u1 + a22 @ mode.phi + k2 * mode.phi
    r3 = a2 @ mode.u2 + k2 * mode.u2 - lam * mode.u1
    w = grid.weights
    size = np.sqrt(sum(np.sum(w * f**2) for f in (mode.u1, mode.phi, mode.u2)))
    defect = np.sqrt(sum(np.sum(w * r**2) for r in (r1, r2, r3)))
    return float(defect / size)


def growth_rate(
    kappa: float,
    grid: Grid1D,
    params: Params,
    omega0: Optional[float] = None,
    band_margin: float = 1e-3,
) -> tuple[float, GrowthMode]:
    """Growth rate lambda(kappa) > 0 and its mode, normalized with u1 of unit weighted norm.

    Works on the parity subspaces in W^1/2-scaled coordinates, where every
    block is symmetric. With H2 = A2 + kappa^2 = Q diag(h) Q^T the pencil
    becomes the symmetric problem H2^1/2 S H2^1/2 z = mu z, u1 = H2^1/2 z.

    Raises:
        PreconditionError: if kappa is outside (margin, 1 - margin) * omega0.
        NoInstabilityError: if the smallest pencil eigenvalue is not negative.
    """
    if omega0 is None:
        omega0 = compute_omega0(grid, params).omega0
    _check_band(kappa, omega0, band_margin)

    pe = grid.parity_basis(Parity.EVEN)
    po = grid.parity_basis(Parity.ODD)
    root_w = np.sqrt(grid.weights[: grid.N // 2])

    def scaled(matrix, left, right):
        return root_w[:, None] * (left.T @ matrix @ right) / root_w[None, :]

    a11, a12, a21, _ = A1_blocks(grid, params)
    k2 = kappa**2
    h_phi = scaled(k2 * np.eye(grid.N) - params.gamma3 * grid.D2, po, po)
    factor = cho_factor(0.5 * (h_phi + h_phi.T))
    b21 = scaled(a21, po, pe)
    S = scaled(a11, pe, pe) + k2 * np.eye(pe.shape[1]) - scaled(a12, pe, po) @ cho_solve(factor, b21)

    h2 = scaled(assemble_A2(grid, params).shifted(k2).matrix, pe, pe)
    levels, Q = np.linalg.eigh(0.5 * (h2 + h2.T))
    root_h2 = (Q * np.sqrt(levels)) @ Q.T
    pencil = root_h2 @ S @ root_h2
    values, vectors = eigh(0.5 * (pencil + pencil.T), subset_by_index=[0, 0])
    mu = float(values[0])
    if mu >= 0:
        raise NoInstabilityError(f"no unstable mode at kappa = {kappa} (smallest pencil eigenvalue {mu:.3e})")

    lam = float(np.sqrt(-mu))
    z = vectors[:, 0]
    u1 = root_h2 @ z
    u2 = lam * ((Q / np.sqrt(levels)) @ (Q.T @ z))
    phi = -cho_solve(factor, b21 @ u1)
    scale = np.linalg.norm(u1)
    if u1[-1] < 0:  # the last even coordinate sits next to x = 0
        scale = -scale
    mode = GrowthMode(
        u1=pe @ (u1 / root_w) / scale,
        phi=po @ (phi / root_w) / scale,
        u2=pe @ (u2 / root_w) / scale,
    )
    logger.debug("growth_rate", kappa=kappa, lam=lam, mu=mu)
    return lam, mode


def _evaluate(kappa: float, grid: Grid1D, params: Params, omega0: float, band_margin: float) -> GrowthPoint:
    try:
        lam, mode = growth_rate(kappa, grid, params, omega0=omega0, band_margin=band_margin)
    except DSLabError as e:
        logger.warning("growth_point_failed", kappa=kappa, error=str(e))
        return GrowthPoint(kappa=kappa, error=f"{type(e).__name__}: {e}")
    residual = unreduced_residual(kappa, lam, mode, grid, params)
    return GrowthPoint(kappa=kappa, lam=lam, mode=mode, residual=residual)


def growth_curve(
    kappa_grid: Sequence[float],
    grid: Grid1D,
    params: Params,
    omega0: Optional[float] = None,
    band_margin: float = 1e-3,
    jobs: int = 1,
) -> GrowthCurve:
    """Growth rates over a list of wavenumbers; failed points are kept with their error."""
    if omega0 is None:
        omega0 = compute_omega0(grid, params).omega0
    kappas = [float(k) for k in kappa_grid]

    if jobs > 1 and len(kappas) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(lambda k: _evaluate(k, grid, params, omega0, band_margin), kappas))
    else:
        points = [_evaluate(k, grid, params, omega0, band_margin) for k in kappas]

    failed = sum(1 for p in points if not p.ok)
    logger.info("growth_curve", points=len(points), failed=failed, omega0=omega0)
    return GrowthCurve(points=points, omega0=omega0)


def mode_alignment_angle(mode_u1: np.ndarray, eigen_u1: np.ndarray, grid: Grid1D) -> float:
    """Angle in degrees between two fields in the weighted inner product, ignoring sign."""
    w = grid.weights
    cosine = abs(np.sum(w * mode_u1 * eigen_u1)) / np.sqrt(np.sum(w * mode_u1**2) * np.sum(w * eigen_u1**2))
    return float(np.degrees(np.arccos(min(cosine, 1.0))))


def boundary_amplitude(mode: GrowthMode) -> float:
    return float(max(abs(mode.u1[0]), abs(mode.u1[-1]), abs(mode.u2[0]), abs(mode.u2[-1])))


def kappa_band(omega0: float, fractions: Sequence[float]) -> list[float]:
    return [float(f) * omega0 for f in fractions]
