"""Data models for dslab configuration and physical parameters."""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Scheme(str, Enum):
    """Spatial discretization of the longitudinal direction x."""

    FINITE_DIFFERENCE = "finite-difference"
    FOURIER = "fourier"


class Params(BaseModel):
    """Coefficients of the elliptic-elliptic focussing system (epsilon fixed to +1)."""

    model_config = ConfigDict(frozen=True)

    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma3: float = 1.0

    @model_validator(mode="after")
    def check_focussing(self):
        if abs(self.gamma1 + self.gamma2 - 2.0) > 1e-14:
            raise ValueError(
                f"gamma1 + gamma2 must equal 2 (got {self.gamma1 + self.gamma2!r})"
            )
        if self.gamma2 <= 0 or self.gamma3 <= 0:
            raise ValueError("gamma2 and gamma3 must be positive")
        return self

    @classmethod
    def from_gamma2(cls, gamma2: float, gamma3: float) -> "Params":
        """Build an admissible triple with gamma1 = 2 - gamma2 exactly."""
        return cls(gamma1=2.0 - gamma2, gamma2=gamma2, gamma3=gamma3)

    @property
    def epsilon(self) -> int:
        return 1

    @property
    def c1(self) -> float:
        """Potential strength 3*gamma1 + gamma2 of the u1 row."""
        return 3.0 * self.gamma1 + self.gamma2

    @property
    def phi_weight(self) -> float:
        """Weight gamma2 / (2 gamma3) of the phi component in the A1 inner product."""
        return self.gamma2 / (2.0 * self.gamma3)


class GridSettings(BaseModel):
    """Longitudinal discretization."""

    Lx: float = 20.0
    N: int = 512
    scheme: Scheme = Scheme.FOURIER

    @field_validator("Lx")
    @classmethod
    def positive_length(cls, v):
        if v <= 0:
            raise ValueError("Lx must be positive")
        return v

    @field_validator("N")
    @classmethod
    def even_count(cls, v):
        if v < 16 or v % 2:
            raise ValueError("N must be an even integer >= 16")
        return v


class Tolerances(BaseModel):
    """Solver tolerances."""

    newton: float = 1e-10
    eig: float = 1e-8
    resolvent: float = 1e-8
    singular_margin: float = 1e-3  # relative distance of k from {0, omega0}
    max_condition: float = 1e12


class ContinuationSettings(BaseModel):
    """Dimension-breaking branch settings."""

    M: int = 16
    N: int = 512
    s_max: float = 0.05
    ds: float = 5e-3
    max_iterations: int = 60

    @field_validator("M")
    @classmethod
    def enough_modes(cls, v):
        if v < 8:
            raise ValueError("M must be at least 8")
        return v

    @model_validator(mode="after")
    def step_fits(self):
        if not 0 < self.ds <= self.s_max:
            raise ValueError("need 0 < ds <= s_max")
        return self


class GrowthSettings(BaseModel):
    """Transverse growth-rate sampling."""

    kappa_min: float = 0.1  # fractions of omega0
    kappa_max: float = 0.9
    kappa_count: int = 17
    band_margin: float = 1e-3


class EvolveSettings(BaseModel):
    """Split-step time integration on the doubly periodic box."""

    Nx: int = 256
    Ny: int = 16
    dt: float = 1e-3
    T: float = 30.0
    amp: float = 1e-4
    window_upper: float = 1e-2

    @field_validator("amp")
    @classmethod
    def small_amplitude(cls, v):
        if not 0 < v <= 1e-4:
            raise ValueError("amp must lie in (0, 1e-4]")
        return v


class AppConfig(BaseModel):
    """Complete application configuration."""

    params: Params = Field(default_factory=Params)
    grid: GridSettings = Field(default_factory=GridSettings)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    continuation: ContinuationSettings = Field(default_factory=ContinuationSettings)
    growth: GrowthSettings = Field(default_factory=GrowthSettings)
    evolve: EvolveSettings = Field(default_factory=EvolveSettings)
    output_dir: str = "out"
    seed: int = 20160101
    log_level: str = "INFO"
    label: Optional[str] = None
