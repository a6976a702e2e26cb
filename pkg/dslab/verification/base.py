"""Abstract base class for verification checks."""

from abc import ABC, abstractmethod
from functools import cached_property
from typing import Optional

from pydantic import BaseModel

from ..models import AppConfig, Params, Scheme
from ..spectral.grid import Grid1D, build_grid
from ..spectral.operators import Omega0Result, compute_omega0


class CheckResult(BaseModel):
    location: str = ""
    label: str
    passed: bool
    detail: str = ""
    value: Optional[float] = None


class VerifyContext:
    """Shared state for a verification run; expensive pieces are computed once."""

    def __init__(self, config: AppConfig, max_nodes: int = 512):
        self.config = config
        self.params: Params = config.params
        self.max_nodes = max_nodes

    @cached_property
    def grid(self) -> Grid1D:
        g = self.config.grid
        return build_grid(g.Lx, min(g.N, self.max_nodes), g.scheme)

    @cached_property
    def omega0(self) -> Omega0Result:
        return compute_omega0(self.grid, self.params)


class BaseCheck(ABC):
    """Base class that all checks must extend.

    ``location`` names the result the check belongs to and ``label`` says what
    is verified. A check passes when its measured value is
    at most ``tolerance`` (``fd_tolerance`` on finite-difference grids).
    """

    location: str = ""
    label: str = ""
    tolerance: float = 0.0
    fd_tolerance: Optional[float] = None

    @abstractmethod
    def measure(self, ctx: VerifyContext) -> tuple[float, str]:
        """Return the measured value and a short detail string."""

    def threshold(self, ctx: VerifyContext) -> float:
        """Second-order grids only reach truncation accuracy."""
        if self.fd_tolerance is not None and ctx.grid.scheme == Scheme.FINITE_DIFFERENCE:
            return self.fd_tolerance
        return self.tolerance

    def run(self, ctx: VerifyContext) -> CheckResult:
        value, detail = self.measure(ctx)
        passed = bool(value <= self.threshold(ctx))
        return CheckResult(location=self.location, label=self.label, passed=passed, detail=detail, value=float(value))

    def __repr__(self):
        return f"{self.__class__.__name__}(label={self.label!r})"
