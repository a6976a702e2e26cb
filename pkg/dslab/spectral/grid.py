"""Discretization of the truncated longitudinal line and the periodic transverse direction.

Two interchangeable schemes are provided:

- ``finite-difference``: uniform nodes on [-Lx, Lx] (both ends included),
  second-order central differences, Dirichlet three-point second derivative.
- ``fourier``: uniform cell-centred nodes on the periodic cell [-Lx, Lx) with
  trigonometric collocation derivatives and trapezoid weights. Odd fields are
  continuous at the seam and vanish there, which stands in for the Dirichlet
  truncation. Both derivative matrices are Toeplitz.

In both schemes ``W @ D2`` is symmetric and ``W @ D1_dirichlet`` is skew, where
``W = diag(weights)``. Self-adjoint operators built from them are exactly
symmetric in the weighted inner product.
"""

from enum import Enum
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.interpolate import CubicSpline
from scipy.linalg import toeplitz

from ..errors import GridError, ParityError
from ..models import Scheme
from ..utils.logger import get_logger

logger = get_logger("grid")


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"
    FULL = "full"


class Decay(str, Enum):
    EVANESCENT = "evanescent"
    STAR = "star"  # derivative decays, the function itself need not


class ParityTag(BaseModel):
    """Parity and decay class of a grid field."""

    model_config = ConfigDict(frozen=True)

    x_parity: Parity
    decay: Decay = Decay.EVANESCENT

    @classmethod
    def even(cls) -> "ParityTag":
        return cls(x_parity=Parity.EVEN)

    @classmethod
    def odd(cls, star: bool = False) -> "ParityTag":
        return cls(x_parity=Parity.ODD, decay=Decay.STAR if star else Decay.EVANESCENT)


class FourierRing(BaseModel):
    """Truncated cosine/sine series in the transverse variable."""

    model_config = ConfigDict(frozen=True)

    M: int
    period: float
    parity: Parity = Parity.EVEN

    @field_validator("M")
    @classmethod
    def at_least_one_mode(cls, v):
        if v < 1:
            raise ValueError("M must be >= 1")
        return v

    @field_validator("period")
    @classmethod
    def positive_period(cls, v):
        if v <= 0:
            raise ValueError("period must be positive")
        return v

    @classmethod
    def from_frequency(cls, M: int, omega: float, parity: Parity = Parity.EVEN) -> "FourierRing":
        return cls(M=M, period=2.0 * np.pi / omega, parity=parity)


class Grid1D(BaseModel):
    """Immutable collocation grid on [-Lx, Lx] with its differentiation operators."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray
    weights: np.ndarray
    D1: np.ndarray
    D1_dirichlet: np.ndarray
    D2: np.ndarray
    integration_matrix: np.ndarray
    scheme: Scheme
    Lx: float
    N: int

    def quadrature(self, field: np.ndarray) -> float:
        return quadrature(field, self)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Plain L2 inner product approximated by the grid quadrature."""
        return float(np.real(np.sum(self.weights * np.conj(a) * b)))

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(a, a), 0.0)))

    def antiderivative(self, q: np.ndarray) -> np.ndarray:
        """phi with phi_x = q and phi(0) = 0; odd whenever q is even."""
        return self.integration_matrix @ q

    def parity_basis(self, parity: Union[Parity, str]) -> np.ndarray:
        """Orthonormal (Euclidean) basis of the even or odd node-reflection subspace."""
        parity = Parity(parity)
        if parity == Parity.FULL:
            return np.eye(self.N)
        half = self.N // 2
        sign = 1.0 if parity == Parity.EVEN else -1.0
        basis = np.zeros((self.N, half))
        idx = np.arange(half)
        basis[idx, idx] = 1.0 / np.sqrt(2.0)
        basis[self.N - 1 - idx, idx] = sign / np.sqrt(2.0)
        return basis

    def interpolate(self, field: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate a grid field at arbitrary points; zero outside [-Lx, Lx]."""
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.Lx
        out = np.zeros(x.shape, dtype=np.result_type(field, float))
        if self.scheme == Scheme.FOURIER:
            xi = 2.0 * np.pi * np.fft.fftfreq(self.N, d=2.0 * self.Lx / self.N)
            coeffs = np.fft.fft(field) / self.N
            values = np.exp(1j * np.outer(x[inside] - self.nodes[0], xi)) @ coeffs
            out[inside] = values if np.iscomplexobj(field) else values.real
        else:
            out[inside] = CubicSpline(self.nodes, field)(x[inside])
        return out

    def metadata(self) -> dict:
        return {"scheme": self.scheme.value, "Lx": self.Lx, "N": self.N}


def reflect(field: np.ndarray) -> np.ndarray:
    """Sample of f(-x); node sets are symmetric so this is index reversal."""
    return field[..., ::-1]


def build_grid(Lx: float, N: int, scheme: Union[Scheme, str] = Scheme.FOURIER) -> Grid1D:
    """Construct a symmetric grid with N nodes on [-Lx, Lx].

    Raises:
        GridError: if N is odd, N < 16 or Lx <= 0.
    """
    scheme = Scheme(scheme)
    if Lx <= 0:
        raise GridError(f"Lx must be positive, got {Lx}")
    if N < 16 or N % 2:
        raise GridError(
            f"N must be an even integer >= 16 (got {N}); the parity split needs a "
            "symmetric node set without a centre node"
        )

    if scheme == Scheme.FINITE_DIFFERENCE:
        parts = _finite_difference_parts(Lx, N)
    else:
        parts = _fourier_parts(Lx, N)

    nodes, weights, D1, D1_dirichlet, D2, integ = parts
    for arr in (nodes, weights, D1, D1_dirichlet, D2, integ):
        arr.setflags(write=False)

    logger.debug("grid_built", scheme=scheme.value, Lx=Lx, N=N)
    return Grid1D(
        nodes=nodes,
        weights=weights,
        D1=D1,
        D1_dirichlet=D1_dirichlet,
        D2=D2,
        integration_matrix=integ,
        scheme=scheme,
        Lx=float(Lx),
        N=int(N),
    )


def parity_project(field: np.ndarray, tag: Union[ParityTag, Parity, str]) -> np.ndarray:
    """Even or odd part of a grid field; idempotent."""
    parity = tag.x_parity if isinstance(tag, ParityTag) else Parity(tag)
    if parity == Parity.FULL:
        return np.array(field, copy=True)
    sign = 1.0 if parity == Parity.EVEN else -1.0
    return 0.5 * (field + sign * reflect(field))


def check_parity(field: np.ndarray, parity: Union[Parity, str], tol: float, name: str = "field"):
    """Raise ParityError if the opposite-parity part of ``field`` exceeds tol."""
    parity = Parity(parity)
    if parity == Parity.FULL:
        return
    other = Parity.ODD if parity == Parity.EVEN else Parity.EVEN
    scale = max(float(np.max(np.abs(field))), 1.0)
    defect = float(np.max(np.abs(parity_project(field, other)))) if field.size else 0.0
    if defect > tol * scale:
        raise ParityError(f"{name} is not {parity.value} (defect {defect:.3e})")


def quadrature(field: np.ndarray, grid: Grid1D) -> float:
    """Approximate the integral of ``field`` over [-Lx, Lx]."""
    if field.shape[-1] != grid.N:
        raise GridError(f"field has {field.shape[-1]} samples, grid has {grid.N}")
    return float(np.sum(grid.weights * field, axis=-1))


def _finite_difference_parts(Lx: float, N: int):
    nodes = np.linspace(-Lx, Lx, N)
    nodes = 0.5 * (nodes - nodes[::-1])
    h = 2.0 * Lx / (N - 1)
    weights = np.full(N, h)

    off = np.full(N - 1, 1.0 / (2.0 * h))
    D1_dirichlet = np.diag(off, 1) - np.diag(off, -1)

    D1 = D1_dirichlet.copy()
    D1[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2.0 * h)
    D1[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2.0 * h)

    D2 = (
        np.diag(np.full(N, -2.0)) + np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
    ) / h**2

    # integrate outward from x = 0; the first half-cell uses q(x) = a + b x^2
    integ = np.zeros((N, N))
    j0 = N // 2
    for side, (j_in, j_next, step) in enumerate(((j0, j0 + 1, 1), (j0 - 1, j0 - 2, -1))):
        sign = 1.0 if step > 0 else -1.0
        # int_0^{h/2} (a + b x^2) dx with a = (9 q_in - q_next)/8, b = (q_next - q_in)/(2 h^2)
        first = np.zeros(N)
        first[j_in] += (9.0 / 8.0) * h / 2.0 - h / 48.0
        first[j_next] += -(1.0 / 8.0) * h / 2.0 + h / 48.0
        integ[j_in] = sign * first
        j = j_in
        while 0 <= j + step < N:
            row = integ[j].copy()
            row[j] += sign * h / 2.0
            row[j + step] += sign * h / 2.0
            integ[j + step] = row
            j += step

    return nodes, weights, D1, D1_dirichlet, D2, integ


def _fourier_parts(Lx: float, N: int):
    h = 2.0 * Lx / N
    nodes = -Lx + h * (np.arange(N) + 0.5)
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = np.full(N, h)
    scale = np.pi / Lx

    m = np.arange(1, N)
    angle = m * np.pi / N
    sign = (-1.0) ** m

    col = np.zeros(N)
    col[1:] = 0.5 * sign / np.tan(angle)
    D1_dirichlet = scale * toeplitz(col, -col)
    D1_dirichlet = 0.5 * (D1_dirichlet - D1_dirichlet.T)
    D1 = D1_dirichlet.copy()
    np.fill_diagonal(D1, 0.0)
    np.fill_diagonal(D1, -D1.sum(axis=1))

    col = np.empty(N)
    col[0] = -(N**2) / 12.0 - 1.0 / 6.0
    col[1:] = -0.5 * sign / np.sin(angle) ** 2
    D2 = scale**2 * toeplitz(col)

    # antiderivative from x = 0: mean slope plus the zero-mean periodic part
    xi = 2.0 * np.pi * np.fft.fftfreq(N, d=h)
    multiplier = np.zeros(N, dtype=complex)
    resolved = np.abs(np.fft.fftfreq(N)) < 0.5  # Nyquist mode has no antiderivative
    resolved[0] = False
    multiplier[resolved] = 1.0 / (1j * xi[resolved])
    coeffs = multiplier[:, None] * np.fft.fft(np.eye(N), axis=0)
    periodic = np.real(np.fft.ifft(coeffs, axis=0))
    at_origin = np.real(np.exp(-1j * xi * nodes[0]) @ coeffs) / N
    integ = np.outer(nodes, np.full(N, 1.0 / N)) + periodic - at_origin[None, :]
    integ = 0.5 * (integ - integ[::-1, ::-1])

    return nodes, weights, D1, D1_dirichlet, D2, integ
