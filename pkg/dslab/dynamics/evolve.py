"""Split-step Fourier integration of the time-dependent system

    i A_t + A_xx + A_yy + (g1 |A|^2 + g2 phi_x) A = 0,
    g3 phi_xx + phi_yy - g3 (|A|^2)_x = 0

on the doubly periodic box [-Lx, Lx) x [0, 2 pi / kappa).
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import BlowUpError, GrowthWindowError, NoInstabilityError, PreconditionError
from ..models import Params
from ..spectral.grid import Grid1D
from ..spectral.operators import lowest_A1_eigenpair
from .instability import growth_rate
from ..utils.logger import get_logger

logger = get_logger("evolve")


def _two_thirds(k: np.ndarray) -> np.ndarray:
    """Wavenumbers kept by the 2/3 rule: |k| <= 2/3 of the largest one."""
    cutoff = (2.0 / 3.0) * np.abs(k).max()
    return np.abs(k) <= cutoff * (1.0 + 1e-12)


class PeriodicDomain:
    """Nodes, wavenumbers and the 2/3-rule mask of the periodic box."""

    def __init__(self, Lx: float, Nx: int, Ny: int, kappa: float):
        if Lx <= 0 or kappa <= 0:
            raise PreconditionError("Lx and kappa must be positive")
        if Nx < 4 or Ny < 1:
            raise PreconditionError("need Nx >= 4 and Ny >= 1")
        self.Lx = float(Lx)
        self.Nx = int(Nx)
        self.Ny = int(Ny)
        self.kappa = float(kappa)
        self.Ly = 2.0 * np.pi / kappa
        self.dx = 2.0 * Lx / Nx
        self.dy = self.Ly / Ny
        self.x = -Lx + self.dx * np.arange(Nx)
        self.y = self.dy * np.arange(Ny)
        self.xi = 2.0 * np.pi * np.fft.fftfreq(Nx, d=self.dx)
        self.eta = 2.0 * np.pi * np.fft.fftfreq(Ny, d=self.dy)
        XI, ETA = np.meshgrid(self.xi, self.eta, indexing="ij")
        self.k2 = XI**2 + ETA**2
        self.xi2 = XI**2
        self.eta2 = ETA**2
        self.dealias = _two_thirds(XI) & _two_thirds(ETA)

    @property
    def shape(self) -> tuple[int, int]:
        return self.Nx, self.Ny

    def metadata(self) -> dict:
        return {"Lx": self.Lx, "Nx": self.Nx, "Ny": self.Ny, "kappa": self.kappa}


class Field2DC(BaseModel):
    """Complex amplitude A(x, y) at time t, indexed (x, y)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    A: np.ndarray
    domain: PeriodicDomain
    t: float = 0.0


class GrowthMeasurement(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lam: float
    window_start: Optional[float] = None
    window_end: Optional[float] = None
    window_reached: bool
    times: np.ndarray
    perturbation_norm: np.ndarray
    mass: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.times.tolist(), self.perturbation_norm.tolist(), self.mass.tolist()))


def mass(field: Field2DC) -> float:
    d = field.domain
    return float(np.sum(np.abs(field.A) ** 2) * d.dx * d.dy)


def phi_x_of(A2: np.ndarray, domain: PeriodicDomain, params: Params) -> np.ndarray:
    """phi_x from |A|^2 via the multiplier g3 xi^2 / (g3 xi^2 + eta^2); the mean mode maps to 0."""
    denom = params.gamma3 * domain.xi2 + domain.eta2
    multiplier = np.zeros_like(denom)
    nonzero = denom > 0
    multiplier[nonzero] = params.gamma3 * domain.xi2[nonzero] / denom[nonzero]
    return np.real(np.fft.ifft2(multiplier * np.fft.fft2(A2)))


class SplitStepSolver:
    """Strang splitting: half linear step, exact nonlinear phase, half linear step."""

    def __init__(self, domain: PeriodicDomain, params: Params, dt: float):
        self.domain = domain
        self.params = params
        self.set_timestep(dt)

    def set_timestep(self, dt: float):
        if dt == 0:
            raise PreconditionError("dt must be nonzero")
        self.dt = dt
        self._half_linear = np.exp(-0.5j * dt * self.domain.k2)

    def intensity(self, A: np.ndarray) -> np.ndarray:
        """|A|^2 with the 2/3 rule applied."""
        spectrum = np.fft.fft2(np.abs(A) ** 2)
        return np.real(np.fft.ifft2(spectrum * self.domain.dealias))

    def _nonlinear(self, A: np.ndarray) -> np.ndarray:
        rho = self.intensity(A)
        potential = self.params.gamma1 * rho + self.params.gamma2 * phi_x_of(rho, self.domain, self.params)
        return A * np.exp(1j * potential * self.dt)

    def __call__(self, field: Field2DC) -> Field2DC:
        A = np.fft.ifft2(self._half_linear * np.fft.fft2(field.A))
        A = self._nonlinear(A)
        A = np.fft.ifft2(self._half_linear * np.fft.fft2(A))
        if not np.all(np.isfinite(A)):
            raise BlowUpError(f"non-finite amplitude at t = {field.t + self.dt}")
        return Field2DC(A=A, domain=field.domain, t=field.t + self.dt)

    def run(self, field: Field2DC, steps: int) -> Field2DC:
        for _ in range(steps):
            field = self(field)
        return field


def step(field: Field2DC, dt: float, params: Params) -> Field2DC:
    """One Strang step; a negative dt steps backwards."""
    return SplitStepSolver(field.domain, params, dt)(field)


def line_soliton_2d(domain: PeriodicDomain) -> Field2DC:
    A = np.repeat((1.0 / np.cosh(domain.x))[:, None], domain.Ny, axis=1).astype(complex)
    return Field2DC(A=A, domain=domain)


def project_kappa(A: np.ndarray) -> np.ndarray:
    """Component of A on the transverse Fourier modes +-kappa."""
    spectrum = np.fft.fft(A, axis=1)
    kept = np.zeros_like(spectrum)
    kept[:, 1] = spectrum[:, 1]
    if A.shape[1] > 2:
        kept[:, -1] = spectrum[:, -1]
    return np.fft.ifft(kept, axis=1)


def perturbation_norm(field: Field2DC) -> float:
    """y-averaged L2 norm of the cos(kappa y) component of A."""
    d = field.domain
    projected = project_kappa(field.A)
    return float(np.sqrt(np.sum(np.abs(projected) ** 2) * d.dx / d.Ny))


def seed_perturbation(domain: PeriodicDomain, profile: np.ndarray, amp: float) -> Field2DC:
    """Line soliton plus amp * profile(x) cos(kappa y), scaled to perturbation norm amp.

    ``profile`` is complex, u1 + i u2 of an instability mode sampled on domain.x.
    """
    if domain.Ny < 3:
        raise PreconditionError("transverse perturbations need Ny >= 3")
    field = line_soliton_2d(domain)
    shape = np.asarray(profile, dtype=complex)[:, None] * np.cos(domain.kappa * domain.y)[None, :]
    unit = Field2DC(A=shape, domain=domain)
    scale = amp / perturbation_norm(unit)
    return Field2DC(A=field.A + scale * shape, domain=domain)


def pencil_profile(
    kappa: float,
    grid: Grid1D,
    params: Params,
    omega0: float,
    x: np.ndarray,
    band_margin: float = 1e-3,
) -> tuple[np.ndarray, Optional[float]]:
    """Seed profile u1 + i u2 sampled at ``x`` and the pencil growth rate.

    Outside the unstable band there is no mode; the A1 ground state is used
    instead and the rate is None.
    """
    try:
        lam, mode = growth_rate(kappa, grid, params, omega0=omega0, band_margin=band_margin)
    except (PreconditionError, NoInstabilityError) as e:
        logger.info("seed_without_mode", kappa=kappa, reason=str(e))
        _, u1, _ = lowest_A1_eigenpair(grid, params)
        return grid.interpolate(u1, x).astype(complex), None
    profile = grid.interpolate(mode.u1, x) + 1j * grid.interpolate(mode.u2, x)
    return profile, lam


def _fit_slope(times: np.ndarray, norms: np.ndarray) -> float:
    slope, _ = np.polyfit(times, np.log(norms), 1)
    return float(slope)


def measure_growth(
    field0: Field2DC,
    amp: float,
    T: float,
    dt: float,
    params: Params,
    window_upper: float = 1e-2,
    require_window: bool = True,
) -> GrowthMeasurement:
    """Exponential growth rate of the cos(kappa y) component of A.

    The slope of log ||P_kappa A|| is fitted over the samples with norm in
    [3 amp, window_upper]; the run stops once the norm leaves the window.

    Raises:
        PreconditionError: if amp > 1e-4 or T, dt are not positive.
        GrowthWindowError: if the window is never traversed and ``require_window`` is set.
    """
    if not 0 < amp <= 1e-4:
        raise PreconditionError(f"amp must lie in (0, 1e-4], got {amp}")
    if T <= 0 or dt <= 0:
        raise PreconditionError("T and dt must be positive")

    solver = SplitStepSolver(field0.domain, params, dt)
    steps = int(round(T / dt))
    lower = 3.0 * amp

    field = field0
    times = [field.t]
    norms = [perturbation_norm(field)]
    masses = [mass(field)]
    for _ in range(steps):
        field = solver(field)
        times.append(field.t)
        norms.append(perturbation_norm(field))
        masses.append(mass(field))
        if norms[-1] > window_upper:
            break

    times_arr, norms_arr, mass_arr = np.array(times), np.array(norms), np.array(masses)
    in_window = (norms_arr >= lower) & (norms_arr <= window_upper)
    reached = bool(np.count_nonzero(in_window) >= 10 and norms_arr[-1] > window_upper)

    if reached:
        lam = _fit_slope(times_arr[in_window], norms_arr[in_window])
        start, end = float(times_arr[in_window][0]), float(times_arr[in_window][-1])
    elif require_window:
        raise GrowthWindowError(
            f"perturbation norm went from {norms_arr[0]:.3e} to {norms_arr[-1]:.3e} "
            f"without crossing [{lower:.1e}, {window_upper:.1e}] by t = {times_arr[-1]}"
        )
    else:
        lam = _fit_slope(times_arr, norms_arr)
        start, end = float(times_arr[0]), float(times_arr[-1])

    logger.info(
        "growth_measured",
        kappa=field0.domain.kappa,
        lam=lam,
        window_reached=reached,
        window=(start, end),
        mass_drift=float(abs(mass_arr[-1] - mass_arr[0])),
    )
    return GrowthMeasurement(
        lam=lam,
        window_start=start,
        window_end=end,
        window_reached=reached,
        times=times_arr,
        perturbation_norm=norms_arr,
        mass=mass_arr,
    )


class EvolveRun(BaseModel):
    """Snapshot series of a plain evolution run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    final: Field2DC
    times: list[float] = Field(default_factory=list)
    masses: list[float] = Field(default_factory=list)
    perturbation_norms: list[float] = Field(default_factory=list)


def evolve(field0: Field2DC, T: float, dt: float, params: Params, record_every: int = 100) -> EvolveRun:
    solver = SplitStepSolver(field0.domain, params, dt)
    steps = int(round(T / dt))
    run = EvolveRun(final=field0)
    field = field0
    for n in range(steps + 1):
        if n % record_every == 0 or n == steps:
            run.times.append(field.t)
            run.masses.append(mass(field))
            run.perturbation_norms.append(perturbation_norm(field) if field.domain.Ny >= 3 else 0.0)
        if n < steps:
            field = solver(field)
    run.final = field
    return run
